//! Physical parameters of the stiff-pump two-mode model and simulation controls.
//!
//! All rates are in units of the analyzer decay rate `kappa2` and all times in
//! units of `1 / kappa2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the squeezer → coupler → Kerr analyzer chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainParams {
    /// Squeezer detuning. Equals `±chi` in the dispersive readout scenario.
    pub delta1: f64,
    /// Analyzer detuning (pump-induced cross-Kerr shift).
    pub delta2: f64,
    pub g1: f64,
    pub phi1: f64,
    pub g2: f64,
    pub phi2: f64,
    /// Analyzer Kerr strength, non-negative.
    pub lambda: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Rate of the one-way squeezer → analyzer coupler.
    pub gamma: f64,
    /// Signal drive on the analyzer, in units of `sqrt(kappa2)`.
    pub eta_d2: f64,
    pub phi_d2: f64,
    /// Classical (detection-stage) noise strength.
    pub n_cl: f64,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            delta1: 0.0,
            delta2: 0.0,
            g1: 0.0,
            phi1: 0.0,
            g2: 0.0,
            phi2: 0.0,
            lambda: 0.01,
            kappa1: 0.0,
            kappa2: 1.0,
            gamma: 1.0,
            eta_d2: 0.0,
            phi_d2: 0.0,
            n_cl: 0.0,
        }
    }
}

/// Names accepted by [`ChainParams::get`] and [`ChainParams::set`].
pub const PARAM_NAMES: [&str; 13] = [
    "delta1", "delta2", "g1", "phi1", "g2", "phi2", "lambda", "kappa1", "kappa2", "gamma",
    "eta_d2", "phi_d2", "n_cl",
];

impl ChainParams {
    /// Total linewidth of the squeezer mode, `kappa1 + gamma`.
    pub fn squeezer_linewidth(&self) -> f64 {
        self.kappa1 + self.gamma
    }

    /// Total linewidth of the analyzer mode, `kappa2 + gamma`.
    pub fn analyzer_linewidth(&self) -> f64 {
        self.kappa2 + self.gamma
    }

    pub fn validate(&self) -> Result<()> {
        let values = [
            self.delta1, self.delta2, self.g1, self.phi1, self.g2, self.phi2, self.lambda,
            self.kappa1, self.kappa2, self.gamma, self.eta_d2, self.phi_d2, self.n_cl,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("chain parameters"));
        }
        let non_negative = [
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma", self.gamma),
            ("lambda", self.lambda),
            ("n_cl", self.n_cl),
            ("g1", self.g1),
            ("g2", self.g2),
            ("eta_d2", self.eta_d2),
        ];
        for (name, v) in non_negative {
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.kappa2 == 0.0 {
            return Err(Error::InvalidParameter("kappa2 must be > 0".into()));
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "delta1" => self.delta1,
            "delta2" => self.delta2,
            "g1" => self.g1,
            "phi1" => self.phi1,
            "g2" => self.g2,
            "phi2" => self.phi2,
            "lambda" => self.lambda,
            "kappa1" => self.kappa1,
            "kappa2" => self.kappa2,
            "gamma" => self.gamma,
            "eta_d2" => self.eta_d2,
            "phi_d2" => self.phi_d2,
            "n_cl" => self.n_cl,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "delta1" => &mut self.delta1,
            "delta2" => &mut self.delta2,
            "g1" => &mut self.g1,
            "phi1" => &mut self.phi1,
            "g2" => &mut self.g2,
            "phi2" => &mut self.phi2,
            "lambda" => &mut self.lambda,
            "kappa1" => &mut self.kappa1,
            "kappa2" => &mut self.kappa2,
            "gamma" => &mut self.gamma,
            "eta_d2" => &mut self.eta_d2,
            "phi_d2" => &mut self.phi_d2,
            "n_cl" => &mut self.n_cl,
            _ => return Err(Error::InvalidParameter(format!("unknown parameter `{name}`"))),
        };
        *slot = value;
        Ok(())
    }
}

/// Time-stepping and sampling controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimControls {
    /// Euler–Maruyama step for conditional trajectories.
    pub dt: f64,
    /// Conditional evolution before the filter window opens.
    pub t_settle: f64,
    /// Boxcar filter window.
    pub t_filter: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Steady state is declared once `max |teom_rhs|` stays below this.
    pub steady_tol: f64,
    /// RK4 step used for the deterministic equations.
    pub ode_dt: f64,
    /// Give up on the deterministic steady state after this much time.
    pub t_max: f64,
}

impl Default for SimControls {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_settle: 10.0,
            t_filter: 800.0,
            n_traj: 100,
            seed: 0,
            steady_tol: 1e-10,
            ode_dt: 0.02,
            t_max: 2.0e4,
        }
    }
}

impl SimControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_filter > 0.0) || !self.t_filter.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_filter must be > 0, got {}",
                self.t_filter
            )));
        }
        if self.dt > self.t_filter / 100.0 {
            return Err(Error::InvalidParameter(format!(
                "dt = {} exceeds t_filter / 100 = {}",
                self.dt,
                self.t_filter / 100.0
            )));
        }
        if self.t_settle < 0.0 {
            return Err(Error::InvalidParameter("t_settle must be >= 0".into()));
        }
        if self.n_traj == 0 {
            return Err(Error::InvalidParameter("n_traj must be >= 1".into()));
        }
        if !(self.steady_tol > 0.0) || !(self.ode_dt > 0.0) || !(self.t_max > 0.0) {
            return Err(Error::InvalidParameter(
                "steady_tol, ode_dt and t_max must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Number of Euler–Maruyama steps inside the filter window.
    pub fn filter_steps(&self) -> usize {
        (self.t_filter / self.dt).round() as usize
    }

    pub fn settle_steps(&self) -> usize {
        (self.t_settle / self.dt).round() as usize
    }
}
