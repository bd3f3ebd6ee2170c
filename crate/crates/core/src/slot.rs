//! Single-value hand-off where a newer value replaces an unclaimed older one.

use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::Duration;

#[derive(Debug)]
struct State<T> {
    value: Option<T>,
    closed: bool,
    published: u64,
    replaced: u64,
}

/// Holds at most one value. Publishing never blocks; an unclaimed value is
/// overwritten and counted as dropped.
#[derive(Debug)]
pub struct LatestSlot<T> {
    state: Mutex<State<T>>,
    ready: Condvar,
}

impl<T> Default for LatestSlot<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> LatestSlot<T> {
    pub fn new() -> Self {
        Self {
            state: Mutex::new(State {
                value: None,
                closed: false,
                published: 0,
                replaced: 0,
            }),
            ready: Condvar::new(),
        }
    }

    fn lock(&self) -> MutexGuard<'_, State<T>> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Stores `value`; returns true when it replaced one nobody took.
    pub fn publish(&self, value: T) -> bool {
        let mut state = self.lock();
        let replaced = state.value.replace(value).is_some();
        state.published += 1;
        if replaced {
            state.replaced += 1;
        }
        drop(state);
        self.ready.notify_all();
        replaced
    }

    pub fn try_take(&self) -> Option<T> {
        self.lock().value.take()
    }

    /// Waits for a value; `None` once the slot is closed and empty.
    pub fn take(&self) -> Option<T> {
        let mut state = self.lock();
        loop {
            if let Some(v) = state.value.take() {
                return Some(v);
            }
            if state.closed {
                return None;
            }
            state = self.ready.wait(state).unwrap_or_else(|e| e.into_inner());
        }
    }

    /// Like [`take`](Self::take) but gives up after `timeout`.
    pub fn take_timeout(&self, timeout: Duration) -> Option<T> {
        let state = self.lock();
        let (mut state, _) = self
            .ready
            .wait_timeout_while(state, timeout, |s| s.value.is_none() && !s.closed)
            .unwrap_or_else(|e| e.into_inner());
        state.value.take()
    }

    /// Wakes all waiters; later takes drain the last value, then return `None`.
    pub fn close(&self) {
        self.lock().closed = true;
        self.ready.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.lock().closed
    }

    /// Number of values currently held, 0 or 1.
    pub fn depth(&self) -> usize {
        usize::from(self.lock().value.is_some())
    }

    pub fn published(&self) -> u64 {
        self.lock().published
    }

    /// Values overwritten before anyone took them.
    pub fn dropped(&self) -> u64 {
        self.lock().replaced
    }
}
