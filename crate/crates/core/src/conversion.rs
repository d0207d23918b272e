//! Mapping between physical SNAIL parameters and the stiff-pump analyzer
//! parameters.
//!
//! The pump phase enters as `e^{iφ2}`, and inverting `P̄` goes through the
//! pump-mode susceptibility `χ⁻¹ = -iω_s + κ_s/2`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ChainParams;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSnailParams {
    pub omega_s: f64,
    pub omega_p: f64,
    pub g3: f64,
    pub g4: f64,
    pub kappa_s: f64,
    pub eps_p: f64,
    pub phi_p: f64,
    pub eta_sig: f64,
    pub phi_sig: f64,
}

/// Analyzer parameters implied by a physical SNAIL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveAnalyzer {
    pub delta2: f64,
    pub lambda: f64,
    pub g2: f64,
    pub phi2: f64,
    pub eta_d2: f64,
    pub phi_d2: f64,
}

impl EffectiveAnalyzer {
    /// Overwrites the analyzer entries of `p`.
    pub fn apply(&self, p: &ChainParams) -> Result<ChainParams> {
        let q = ChainParams {
            delta2: self.delta2,
            lambda: self.lambda,
            g2: self.g2,
            phi2: self.phi2,
            eta_d2: self.eta_d2,
            phi_d2: self.phi_d2,
            ..*p
        };
        q.validate()?;
        Ok(q)
    }
}

/// Inverse pump-mode susceptibility.
fn inverse_susceptibility(omega_s: f64, kappa_s: f64) -> C64 {
    C64::new(kappa_s / 2.0, -omega_s)
}

impl PhysicalSnailParams {
    /// Stiff pump amplitude `P̄`.
    pub fn pump_amplitude(&self) -> C64 {
        I * self.kappa_s.sqrt() * C64::from_polar(self.eps_p, -self.phi_p) / C64::new(-self.kappa_s / 2.0, self.omega_s)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.omega_s, self.omega_p, self.g3, self.g4, self.kappa_s, self.eps_p, self.phi_p,
            self.eta_sig, self.phi_sig,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("physical SNAIL parameters"));
        }
        if !(self.kappa_s > 0.0) {
            return Err(Error::InvalidParameter(format!("kappa_s must be > 0, got {}", self.kappa_s)));
        }
        if (self.omega_p - 2.0 * self.omega_s).abs() > 1e-12 * self.omega_s.abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "pump must sit at twice the SNAIL frequency: omega_p = {}, omega_s = {}",
                self.omega_p, self.omega_s
            )));
        }
        if self.eps_p < 0.0 || self.eta_sig < 0.0 {
            return Err(Error::InvalidParameter("drive amplitudes must be >= 0".into()));
        }
        Ok(())
    }
}

/// Wraps a phase into `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI { PI } else { y }
}

pub fn to_effective(phys: &PhysicalSnailParams) -> Result<EffectiveAnalyzer> {
    phys.validate()?;
    let pbar = phys.pump_amplitude();
    let pump = 6.0 * phys.g3 * pbar;
    Ok(EffectiveAnalyzer {
        delta2: -24.0 * phys.g4 * (1.0 + pbar.norm_sqr()),
        lambda: -12.0 * phys.g4,
        g2: pump.norm(),
        phi2: if pump.norm() == 0.0 { 0.0 } else { pump.arg() },
        eta_d2: phys.eta_sig,
        phi_d2: wrap_phase(phys.phi_sig + FRAC_PI_2),
    })
}

/// Analyzer detuning that a SNAIL with these nonlinearities produces at
/// pump strength `g2`.
pub fn induced_detuning(g2: f64, g3: f64, g4: f64) -> f64 {
    let pbar = g2 / (6.0 * g3.abs());
    -24.0 * g4 * (1.0 + pbar * pbar)
}

/// Physical pump and signal drive realising the analyzer entries of `p`.
/// `p.lambda` and `p.delta2` must be the values this SNAIL produces.
pub fn from_effective(p: &ChainParams, g3: f64, g4: f64, omega_s: f64, kappa_s: f64) -> Result<PhysicalSnailParams> {
    if g3 == 0.0 || !g3.is_finite() {
        return Err(Error::InvalidParameter("g3 must be nonzero: no three-wave mixing".into()));
    }
    if !(kappa_s > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa_s must be > 0, got {kappa_s}")));
    }
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300);
    if !close(p.lambda, -12.0 * g4) && !(p.lambda == 0.0 && g4 == 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda = {} is inconsistent with g4 = {g4} (expected {})",
            p.lambda,
            -12.0 * g4
        )));
    }
    let detuning = induced_detuning(p.g2, g3, g4);
    if !close(p.delta2, detuning) && !(p.delta2 == 0.0 && detuning == 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta2 = {} is inconsistent with the SNAIL nonlinearities (expected {detuning})",
            p.delta2
        )));
    }
    let pump = C64::from_polar(p.g2, p.phi2);
    // ε_p e^{-iφ_p} = -g2 e^{iφ2} / (6 i g3 √κ_s χ)
    let amp = -pump * inverse_susceptibility(omega_s, kappa_s) / (6.0 * I * g3 * kappa_s.sqrt());
    Ok(PhysicalSnailParams {
        omega_s,
        omega_p: 2.0 * omega_s,
        g3,
        g4,
        kappa_s,
        eps_p: amp.norm(),
        phi_p: if amp.norm() == 0.0 { 0.0 } else { -amp.arg() },
        eta_sig: p.eta_d2,
        phi_sig: wrap_phase(p.phi_d2 - FRAC_PI_2),
    })
}
