//! Cumulant-level simulation of a squeezer → Kerr analyzer → homodyne
//! measurement chain, with closed-form analytics for the linear and weakly
//! nonlinear regimes.
//!
//! Units: the analyzer decay rate is the unit of frequency, so rates are in
//! multiples of `κ2` and times in multiples of `1/κ2`.

pub mod conversion;
pub mod error;
pub mod integrate;
pub mod linear;
pub mod measurement;
pub mod metrics;
pub mod model;
pub mod params;
pub mod perturbative;
pub mod rng;
pub mod state;

pub use conversion::{from_effective, to_effective, EffectiveAnalyzer, PhysicalSnailParams};
pub use error::{Error, Result};
pub use integrate::{run_trajectories, solve_steady, TrajectoryRecord};
pub use linear::{
    analyzer_gain_db, build_linear_system, filtered_covariance, lyapunov_covariance, squeezing_axis,
    threshold, LinearSystem, Mode,
};
pub use measurement::{boxcar_filter, shots_for_class, synthesize_trace, Encoding, QuadratureTrace, ShotRecord};
pub use metrics::{
    augment_classical_noise, fisher_discriminant, intracavity_covariance_proxy, mean_separation, qda_fidelity,
    steady_metrics, ClassStats, FidelityMode, SteadyMetrics,
};
pub use model::{steom_increment, teom_rhs, Coefficients};
pub use params::{ChainParams, SimControls, PARAM_NAMES};
pub use perturbative::{
    perturbative_delta_mu, perturbative_fisher, perturbative_v, solve_perturbative, solve_zeroth_mean,
    zeroth_cumulants, PerturbativeSolution,
};
pub use state::CumulantState;

pub use nalgebra::{Matrix2, Vector2};
pub use num_complex::Complex64;
