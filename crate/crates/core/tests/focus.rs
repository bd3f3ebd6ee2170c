use holo_core::diffraction::{PlanCache, PropagatorRegistry, ASM, BLDSF};
use holo_core::field::Grid;
use holo_core::focus::{best_focus, focus_sweep, sweep_distances};
use holo_core::sim::{generate_hologram, ObjectSpec};
use holo_core::test_support::{optics, PITCH, Z0};
use std::sync::Arc;

#[test]
fn sweep_peaks_at_the_object_distance() {
    let grid = Grid::square(256, PITCH).unwrap();
    let frame = generate_hologram(&ObjectSpec::opaque_disk(20e-6), Z0, grid, optics()).unwrap();
    let cache = PlanCache::new(Arc::new(PropagatorRegistry::builtin()));
    let distances = sweep_distances(0.5 * Z0, 2.0 * Z0, 31).unwrap();
    for method in [ASM, BLDSF] {
        let points = focus_sweep(&frame, &distances, method, 1.0, &cache).unwrap();
        assert_eq!(points.len(), 31);
        let best = best_focus(&points).unwrap();
        assert!(
            (best.distance - Z0).abs() / Z0 < 0.05,
            "{method}: {}",
            best.distance
        );
    }
}

#[test]
fn phase_object_is_found_too() {
    let grid = Grid::square(256, PITCH).unwrap();
    let spec = ObjectSpec::phase_disk(20e-6, 1.0);
    let frame = generate_hologram(&spec, Z0, grid, optics()).unwrap();
    let cache = PlanCache::new(Arc::new(PropagatorRegistry::builtin()));
    let distances = sweep_distances(0.5 * Z0, 2.0 * Z0, 31).unwrap();
    let best = best_focus(&focus_sweep(&frame, &distances, BLDSF, 1.0, &cache).unwrap()).unwrap();
    assert!((best.distance - Z0).abs() / Z0 < 0.05, "{}", best.distance);
}
