//! Fixtures shared by the benchmarks in `benches/`.

use coulomb3::config::RunConfig;
use coulomb3::pipeline::build_operator;
use coulomb3::HamiltonianOperator;

/// Default-physics operator on an `n_r × n_rho × n_theta` lattice.
pub fn operator(n_r: usize, n_rho: usize, n_theta: usize) -> HamiltonianOperator {
    let mut cfg = RunConfig::default();
    cfg.grid.n_r = n_r;
    cfg.grid.n_rho = n_rho;
    cfg.grid.n_theta = n_theta;
    build_operator(&cfg).expect("valid lattice").1
}

/// Deterministic, non-trivial input vector.
pub fn probe_vector(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5).collect()
}
