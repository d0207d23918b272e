//! Shared operating points for the benchmarks under `benches/`.

use kerrchain_core::{ChainParams, SimControls};

/// Nonlinear working point: squeezer at 80 % of threshold, analyzer
/// pumped and driven.
pub fn working_point() -> ChainParams {
    ChainParams { g1: 0.4, g2: 0.9, eta_d2: 0.55, phi_d2: -std::f64::consts::FRAC_PI_4, ..Default::default() }
}

/// Short conditional run: one time unit at the default step.
pub fn short_run() -> SimControls {
    SimControls { t_settle: 0.0, t_filter: 1.0, n_traj: 1, ..Default::default() }
}
