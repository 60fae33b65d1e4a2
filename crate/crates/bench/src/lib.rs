//! Workloads shared by the benchmarks.

use rpfkit_core::{build_model, Alphabet, AprioriMeasure, Potential, SubshiftModel};

/// Full shift on `n` symbols with a deterministic depth-`depth` potential.
pub fn full_shift_workload(n: usize, depth: usize) -> (SubshiftModel, Potential) {
    let model = build_model(
        Alphabet::indexed(n).unwrap(),
        vec![vec![true; n]; n],
        AprioriMeasure::uniform(n),
    )
    .unwrap();
    let phi = Potential::from_fn(&model, depth, "bench", |w| {
        w.0.iter()
            .enumerate()
            .map(|(i, &s)| ((s * 7 + i * 3) % 11) as f64 / 11.0 - 0.5)
            .sum()
    })
    .unwrap();
    (model, phi)
}
