use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use super::{PlanRequest, PropagationPlan, PropagatorRegistry};
use crate::error::Result;

pub const DEFAULT_PLAN_CACHE_CAPACITY: usize = 8;

/// Exact-match cache key. Floats are compared by bit pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlanKey {
    pub method: String,
    pub width: usize,
    pub height: usize,
    pub pitch_x: u64,
    pub pitch_y: u64,
    pub wavelength: u64,
    pub z: u64,
    pub magnification: u64,
}

impl PlanKey {
    pub fn new(method: &str, request: &PlanRequest) -> Self {
        Self {
            method: method.to_string(),
            width: request.grid.width,
            height: request.grid.height,
            pitch_x: request.grid.pitch_x.to_bits(),
            pitch_y: request.grid.pitch_y.to_bits(),
            wavelength: request.optics.wavelength.to_bits(),
            z: request.z.to_bits(),
            magnification: request.magnification.to_bits(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub entries: usize,
}

#[derive(Default)]
struct Entries {
    // most recently used at the back
    lru: VecDeque<(PlanKey, Arc<dyn PropagationPlan>)>,
    hits: u64,
    misses: u64,
}

/// Least-recently-used plan cache shared between frames and threads.
///
/// Lookups and inserts happen under one lock, so `get_or_create` is
/// linearizable: concurrent callers with the same key build the plan once.
pub struct PlanCache {
    registry: Arc<PropagatorRegistry>,
    capacity: usize,
    entries: Mutex<Entries>,
}

impl std::fmt::Debug for PlanCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlanCache")
            .field("capacity", &self.capacity)
            .field("stats", &self.stats())
            .finish()
    }
}

impl PlanCache {
    pub fn new(registry: Arc<PropagatorRegistry>) -> Self {
        Self::with_capacity(registry, DEFAULT_PLAN_CACHE_CAPACITY)
    }

    pub fn with_capacity(registry: Arc<PropagatorRegistry>, capacity: usize) -> Self {
        Self {
            registry,
            capacity: capacity.max(1),
            entries: Mutex::new(Entries::default()),
        }
    }

    pub fn registry(&self) -> &Arc<PropagatorRegistry> {
        &self.registry
    }

    /// Returns the cached plan for `method` and `request`, building it on a
    /// miss. Methods that ignore magnification are keyed with `M = 1`.
    pub fn get_or_create(
        &self,
        method: &str,
        request: &PlanRequest,
    ) -> Result<Arc<dyn PropagationPlan>> {
        let propagator = self.registry.get(method)?;
        let mut request = *request;
        if !propagator.supports_magnification() {
            request.magnification = 1.0;
        }
        let key = PlanKey::new(method, &request);

        let mut entries = self.entries.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(pos) = entries.lru.iter().position(|(k, _)| *k == key) {
            let entry = entries.lru.remove(pos).expect("position is in range");
            let plan = Arc::clone(&entry.1);
            entries.lru.push_back(entry);
            entries.hits += 1;
            return Ok(plan);
        }
        entries.misses += 1;
        let plan = propagator.plan(&request)?;
        if entries.lru.len() == self.capacity {
            entries.lru.pop_front();
        }
        entries.lru.push_back((key, Arc::clone(&plan)));
        Ok(plan)
    }

    pub fn stats(&self) -> CacheStats {
        let entries = self.entries.lock().unwrap_or_else(|e| e.into_inner());
        CacheStats {
            hits: entries.hits,
            misses: entries.misses,
            entries: entries.lru.len(),
        }
    }

    pub fn clear(&self) {
        self.entries
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .lru
            .clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffraction::{ASM, BLDSF};
    use crate::field::{Grid, OpticalParams};

    fn cache() -> PlanCache {
        PlanCache::new(Arc::new(PropagatorRegistry::builtin()))
    }

    fn request(z: f64, m: f64) -> PlanRequest {
        PlanRequest::new(
            Grid::square(16, 2.5e-6).unwrap(),
            z,
            m,
            OpticalParams::default(),
        )
    }

    #[test]
    fn second_lookup_hits() {
        let cache = cache();
        let a = cache.get_or_create(BLDSF, &request(-0.011, 1.0)).unwrap();
        assert_eq!(cache.stats().hits, 0);
        let b = cache.get_or_create(BLDSF, &request(-0.011, 1.0)).unwrap();
        assert_eq!(
            cache.stats(),
            CacheStats {
                hits: 1,
                misses: 1,
                entries: 1
            }
        );
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn magnification_is_part_of_the_key() {
        let cache = cache();
        cache.get_or_create(BLDSF, &request(-0.011, 1.0)).unwrap();
        cache.get_or_create(BLDSF, &request(-0.011, 1.2)).unwrap();
        assert_eq!(cache.stats().misses, 2);
        // ASM ignores magnification, so changing it reuses the plan
        cache.get_or_create(ASM, &request(-0.011, 1.0)).unwrap();
        cache.get_or_create(ASM, &request(-0.011, 1.2)).unwrap();
        assert_eq!(cache.stats().misses, 3);
        assert_eq!(cache.stats().hits, 1);
    }

    #[test]
    fn evicts_least_recently_used() {
        let cache = PlanCache::with_capacity(Arc::new(PropagatorRegistry::builtin()), 2);
        cache.get_or_create(BLDSF, &request(0.01, 1.0)).unwrap();
        cache.get_or_create(BLDSF, &request(0.02, 1.0)).unwrap();
        cache.get_or_create(BLDSF, &request(0.01, 1.0)).unwrap();
        cache.get_or_create(BLDSF, &request(0.03, 1.0)).unwrap(); // evicts 0.02
        assert_eq!(cache.stats().entries, 2);
        cache.get_or_create(BLDSF, &request(0.01, 1.0)).unwrap();
        assert_eq!(cache.stats().hits, 2);
        cache.get_or_create(BLDSF, &request(0.02, 1.0)).unwrap();
        assert_eq!(cache.stats().misses, 4);
    }

    #[test]
    fn default_capacity_is_eight() {
        let cache = cache();
        for k in 0..12 {
            cache
                .get_or_create(BLDSF, &request(0.001 * (k + 1) as f64, 1.0))
                .unwrap();
        }
        assert_eq!(cache.stats().entries, 8);
    }

    #[test]
    fn concurrent_get_or_create_builds_once() {
        let cache = Arc::new(cache());
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let cache = Arc::clone(&cache);
                std::thread::spawn(move || cache.get_or_create(ASM, &request(0.005, 1.0)).unwrap())
            })
            .collect();
        let plans: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert!(plans.windows(2).all(|w| Arc::ptr_eq(&w[0], &w[1])));
        assert_eq!(
            cache.stats(),
            CacheStats {
                hits: 7,
                misses: 1,
                entries: 1
            }
        );
    }

    #[test]
    fn unknown_method_is_an_error() {
        assert!(cache()
            .get_or_create("fraunhofer", &request(0.01, 1.0))
            .is_err());
    }
}
