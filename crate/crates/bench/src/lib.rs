//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use qflow_core::{sample_initial, GridDomain, InitialSpec, QGridFunction, QPoint};

/// The symmetric cosine pair on an interval grid.
pub fn cosine_pair(resolution: usize) -> QGridFunction {
    let dom = Arc::new(GridDomain::new(1, resolution).expect("odd resolution >= 3"));
    sample_initial(&InitialSpec::symmetric_cos(), dom, 2).expect("Q = 2")
}

/// Deterministic planar Q-points with `q` entries, no RNG needed.
pub fn planar_qpoint(q: usize, phase: f64) -> QPoint {
    let pts: Vec<Vec<f64>> = (0..q)
        .map(|i| {
            let a = phase + i as f64 * 1.7;
            vec![a.sin() * 3.0, (2.0 * a).cos()]
        })
        .collect();
    QPoint::new(&pts).expect("finite")
}

/// A wiggly vector that needs several PAV merges.
pub fn zigzag(len: usize) -> Vec<f64> {
    (0..len).map(|i| (i as f64 * 0.37).sin() + 0.01 * i as f64).collect()
}
