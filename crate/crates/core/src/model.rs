//! Truncated cumulant equations of motion for the two-mode chain.
//!
//! Third- and higher-order cumulants are set to zero. The unconditional
//! equations ([`teom_rhs`]) describe the noise-averaged dynamics; the
//! conditional ones ([`steom_increment`]) add homodyne back-action on the
//! analyzer for both measured quadratures.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::params::ChainParams;
use crate::state::CumulantState;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Parameter-derived constants, computed once per parameter set.
#[derive(Debug, Clone, Copy)]
pub struct Coefficients {
    d1: f64,
    d2: f64,
    /// `g1 e^{i phi1}`
    p1: C64,
    /// `g2 e^{i phi2}`
    p2: C64,
    lam: f64,
    k1: f64,
    k2: f64,
    gm: f64,
    /// `sqrt(kappa2) eta e^{i phi_d}`
    drive: C64,
    /// `sqrt(kappa2 / 2)`
    meas: f64,
}

impl Coefficients {
    pub fn new(p: &ChainParams) -> Self {
        Self {
            d1: p.delta1,
            d2: p.delta2,
            p1: C64::from_polar(p.g1, p.phi1),
            p2: C64::from_polar(p.g2, p.phi2),
            lam: p.lambda,
            k1: p.kappa1,
            k2: p.kappa2,
            gm: p.gamma,
            drive: C64::from_polar(p.kappa2.sqrt() * p.eta_d2, p.phi_d2),
            meas: (p.kappa2 / 2.0).sqrt(),
        }
    }

    /// Noise-averaged time derivative of every cumulant.
    pub fn drift(&self, x: &CumulantState) -> CumulantState {
        let Self { d1, d2, p1, p2, lam, k1, k2, gm, drive, .. } = *self;
        let (p1c, p2c) = (p1.conj(), p2.conj());
        let CumulantState {
            s1,
            s2,
            s1d,
            s2d,
            c_s1s1: c11,
            c_s1s2: c12,
            c_s2s2: c22,
            c_s1ds1: c1d1,
            c_s1ds2: c1d2,
            c_s2ds1: c2d1,
            c_s2ds2: c2d2,
            c_s1ds1d: c1d1d,
            c_s1ds2d: c1d2d,
            c_s2ds2d: c2d2d,
        } = *x;
        let il = I * lam;
        let s2sq = s2 * s2;
        let s2dsq = s2d * s2d;
        let n2 = s2 * s2d;
        let cross = -gm - (k1 + k2) / 2.0;

        CumulantState {
            s1: -(gm + k1) / 2.0 * s1 + I * d1 * s1 - I * p1 * s1d,
            s2: -gm * s1 + (I * d2 - (k2 + gm) / 2.0) * s2
                + il * (2.0 * c2d2 * s2 + s2d * (s2sq + c22))
                - I * p2 * s2d
                - drive,
            s1d: -(gm + k1) / 2.0 * s1d - I * d1 * s1d + I * p1c * s1,
            s2d: -gm * s1d - (I * d2 + (k2 + gm) / 2.0) * s2d
                - il * (2.0 * c2d2 * s2d + s2 * (s2dsq + c2d2d))
                + I * p2c * s2
                - drive.conj(),
            c_s1s1: (-gm - k1 + 2.0 * I * d1) * c11 - I * p1 * (1.0 + 2.0 * c1d1),
            c_s1s2: -gm * c11
                + (cross + I * (d1 + d2)) * c12
                + il * (c2d1 * c22 + 2.0 * c12 * c2d2 + c2d1 * s2sq + 2.0 * c12 * n2)
                - I * p1 * c1d2
                - I * p2 * c2d1,
            c_s2s2: -2.0 * gm * c12
                + (-gm - k2 + 2.0 * I * d2) * c22
                + il * (c22
                    + 6.0 * c22 * c2d2
                    + s2sq
                    + 2.0 * c2d2 * s2sq
                    + 4.0 * c22 * n2)
                - I * p2 * (1.0 + 2.0 * c2d2),
            c_s1ds1: (-gm - k1) * c1d1 - I * p1 * c1d1d + I * p1c * c11,
            c_s1ds2: -gm * c1d1
                + (cross + I * (-d1 + d2)) * c1d2
                + il * (2.0 * c1d2 * c2d2 + c1d2d * c22 + c1d2d * s2sq + 2.0 * c1d2 * n2)
                + I * p1c * c12
                - I * p2 * c1d2d,
            c_s2ds1: -gm * c1d1
                + (cross + I * (d1 - d2)) * c2d1
                - il * (2.0 * c2d1 * c2d2 + c12 * c2d2d + 2.0 * c2d1 * n2 + c12 * s2dsq)
                + I * p2c * c12
                - I * p1 * c1d2d,
            c_s2ds2: -gm * c1d2 - gm * c2d1 + (-gm - k2) * c2d2
                + il * (c2d2d * s2sq - c22 * s2dsq)
                - I * p2 * c2d2d
                + I * p2c * c22,
            c_s1ds1d: (-gm - k1 - 2.0 * I * d1) * c1d1d + I * p1c * (1.0 + 2.0 * c1d1),
            c_s1ds2d: -gm * c1d1d
                + (cross - I * (d1 + d2)) * c1d2d
                - il * (2.0 * c1d2d * c2d2 + c1d2 * c2d2d + 2.0 * c1d2d * n2 + c1d2 * s2dsq)
                + I * p2c * c1d2
                + I * p1c * c2d1,
            c_s2ds2d: -2.0 * gm * c1d2d
                + (-gm - k2 - 2.0 * I * d2) * c2d2d
                - il * (c2d2d
                    + 6.0 * c2d2 * c2d2d
                    + 4.0 * c2d2d * n2
                    + s2dsq
                    + 2.0 * c2d2 * s2dsq)
                + I * p2c * (1.0 + 2.0 * c2d2),
        }
    }

    /// Measurement-conditioning drift of the second cumulants, the
    /// `-kappa2 (...)` products that appear only in the conditional equations.
    pub fn conditioning(&self, x: &CumulantState) -> CumulantState {
        let k2 = self.k2;
        let CumulantState {
            c_s1s2: c12,
            c_s2s2: c22,
            c_s1ds2: c1d2,
            c_s2ds1: c2d1,
            c_s2ds2: c2d2,
            c_s1ds2d: c1d2d,
            c_s2ds2d: c2d2d,
            ..
        } = *x;
        CumulantState {
            c_s1s1: -2.0 * k2 * c12 * c2d1,
            c_s1s2: -k2 * c12 * c2d2 - k2 * c22 * c2d1,
            c_s2s2: -2.0 * k2 * c2d2 * c22,
            c_s1ds1: -k2 * c1d2 * c2d1 - k2 * c12 * c1d2d,
            c_s1ds2: -k2 * c1d2 * c2d2 - k2 * c1d2d * c22,
            c_s2ds1: -k2 * c2d1 * c2d2 - k2 * c12 * c2d2d,
            c_s2ds2: -k2 * c2d2 * c2d2 - k2 * c22 * c2d2d,
            c_s1ds1d: -2.0 * k2 * c1d2 * c1d2d,
            c_s1ds2d: -k2 * c1d2d * c2d2 - k2 * c1d2 * c2d2d,
            c_s2ds2d: -2.0 * k2 * c2d2 * c2d2d,
            ..CumulantState::default()
        }
    }

    /// Coefficients of `dW_I` and `dW_Q` in the conditional mean equations.
    pub fn diffusion(&self, x: &CumulantState) -> (CumulantState, CumulantState) {
        let m = self.meas;
        // d<a> ∝ (C_{a s2} + C_{s2† a}) dW_I - i (C_{a s2} - C_{s2† a}) dW_Q
        let pair = |a: C64, b: C64| (m * (a + b), -I * m * (a - b));
        let (s1i, s1q) = pair(x.c_s1s2, x.c_s2ds1);
        let (s2i, s2q) = pair(x.c_s2s2, x.c_s2ds2);
        let (s1di, s1dq) = pair(x.c_s1ds2, x.c_s1ds2d);
        let (s2di, s2dq) = pair(x.c_s2ds2, x.c_s2ds2d);
        (
            CumulantState { s1: s1i, s2: s2i, s1d: s1di, s2d: s2di, ..Default::default() },
            CumulantState { s1: s1q, s2: s2q, s1d: s1dq, s2d: s2dq, ..Default::default() },
        )
    }

    /// Euler–Maruyama increment without input validation.
    #[inline]
    pub fn increment(&self, x: &CumulantState, dw_i: f64, dw_q: f64, dt: f64) -> CumulantState {
        let det = self.drift(x) + self.conditioning(x);
        let (bi, bq) = self.diffusion(x);
        let mut out = det * dt;
        out.s1 += bi.s1 * dw_i + bq.s1 * dw_q;
        out.s2 += bi.s2 * dw_i + bq.s2 * dw_q;
        out.s1d += bi.s1d * dw_i + bq.s1d * dw_q;
        out.s2d += bi.s2d * dw_i + bq.s2d * dw_q;
        out
    }
}

/// Time derivative of the noise-averaged cumulants.
pub fn teom_rhs(state: &CumulantState, p: &ChainParams) -> Result<CumulantState> {
    if !state.is_finite() {
        return Err(Error::NonFinite("cumulant state"));
    }
    p.validate()?;
    Ok(Coefficients::new(p).drift(state))
}

/// Conditional increment `drift·dt + diffusion·dW` over one step of length `dt`.
pub fn steom_increment(
    state: &CumulantState,
    p: &ChainParams,
    dw_i: f64,
    dw_q: f64,
    dt: f64,
) -> Result<CumulantState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    if !state.is_finite() || !dw_i.is_finite() || !dw_q.is_finite() {
        return Err(Error::NonFinite("conditional step input"));
    }
    p.validate()?;
    Ok(Coefficients::new(p).increment(state, dw_i, dw_q, dt))
}
