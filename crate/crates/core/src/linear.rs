//! Closed forms for the linear (Λ = 0) chain: drift and diffusion matrices,
//! instability thresholds, steady covariance, and the boxcar-filtered
//! covariance of the detected quadratures.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{Matrix2, Matrix2x4, Matrix4, SMatrix, SVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ChainParams;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Index of each operator in `z = (s1, s1†, s2, s2†)`.
pub const S1: usize = 0;
pub const S1D: usize = 1;
pub const S2: usize = 2;
pub const S2D: usize = 3;

/// Drift `J` and source `D` of `dC/dt = J C + C Jᵀ + D` over `z`, plus
/// the homodyne read-out of the analyzer.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub j: Matrix4<C64>,
    pub d: Matrix4<C64>,
    /// Homodyne rate of the measured (analyzer) output.
    pub gamma_h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Squeezer,
    Analyzer,
}

/// `U = (1/√2) [[1, 1], [-i, i]]`, mapping `(s, s†)` to `(I, Q)`.
pub fn quadrature_map() -> Matrix2<C64> {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    Matrix2::new(h, h, -I * h, I * h)
}

/// Read-out matrix `√γ_H (0, U)` selecting the analyzer quadratures.
pub fn readout_matrix(gamma_h: f64) -> Matrix2x4<C64> {
    let u = quadrature_map() * C64::new(gamma_h.sqrt(), 0.0);
    let mut m = Matrix2x4::zeros();
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(&u);
    m
}

/// Drift and source of one degenerate paramp block in `(s, s†)`.
fn mode_block(detuning: f64, linewidth: f64, pump: C64) -> (Matrix2<C64>, Matrix2<C64>) {
    let diag = C64::new(-linewidth / 2.0, detuning);
    let j = Matrix2::new(diag, -I * pump, I * pump.conj(), diag.conj());
    let d = Matrix2::new(-I * pump, ZERO, ZERO, I * pump.conj());
    (j, d)
}

pub fn build_linear_system(p: &ChainParams) -> LinearSystem {
    let (j1, d1) = mode_block(p.delta1, p.squeezer_linewidth(), C64::from_polar(p.g1, p.phi1));
    let (j2, d2) = mode_block(p.delta2, p.analyzer_linewidth(), C64::from_polar(p.g2, p.phi2));
    let mut j = Matrix4::zeros();
    let mut d = Matrix4::zeros();
    j.fixed_view_mut::<2, 2>(0, 0).copy_from(&j1);
    j.fixed_view_mut::<2, 2>(2, 2).copy_from(&j2);
    // one-way transfer squeezer -> analyzer
    j[(S2, S1)] = C64::new(-p.gamma, 0.0);
    j[(S2D, S1D)] = C64::new(-p.gamma, 0.0);
    d.fixed_view_mut::<2, 2>(0, 0).copy_from(&d1);
    d.fixed_view_mut::<2, 2>(2, 2).copy_from(&d2);
    LinearSystem { j, d, gamma_h: p.kappa2 }
}

/// Eigenvalues of a 2×2 complex matrix.
pub fn eigenvalues2(m: &Matrix2<C64>) -> [C64; 2] {
    let half_tr = (m[(0, 0)] + m[(1, 1)]) / 2.0;
    let disc = (half_tr * half_tr - m.determinant()).sqrt();
    [half_tr + disc, half_tr - disc]
}

/// Largest real part of the spectrum of a drift matrix whose upper-right
/// 2×2 block vanishes (block lower-triangular).
pub fn max_growth_rate(j: &Matrix4<C64>) -> f64 {
    debug_assert!(j.fixed_view::<2, 2>(0, 2).iter().all(|z| *z == ZERO));
    let a: Matrix2<C64> = j.fixed_view::<2, 2>(0, 0).into_owned();
    let b: Matrix2<C64> = j.fixed_view::<2, 2>(2, 2).into_owned();
    eigenvalues2(&a)
        .into_iter()
        .chain(eigenvalues2(&b))
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

impl LinearSystem {
    pub fn max_growth_rate(&self) -> f64 {
        max_growth_rate(&self.j)
    }

    pub fn is_stable(&self) -> bool {
        self.max_growth_rate() < 0.0
    }
}

/// Pump strength at which the given mode's linear block becomes marginally
/// stable, found by bisection.
pub fn threshold(p: &ChainParams, which: Mode) -> f64 {
    let (detuning, linewidth) = match which {
        Mode::Squeezer => (p.delta1, p.squeezer_linewidth()),
        Mode::Analyzer => (p.delta2, p.analyzer_linewidth()),
    };
    let growth = |g: f64| {
        let (j, _) = mode_block(detuning, linewidth, C64::new(g, 0.0));
        eigenvalues2(&j).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    };
    let mut hi = linewidth.max(detuning.abs()).max(1e-300);
    while growth(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    if growth(lo) >= 0.0 {
        return 0.0;
    }
    while hi - lo > 1e-10 * hi.max(1.0) * 1e-2 {
        let mid = 0.5 * (lo + hi);
        if growth(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `A X + X Aᵀ + Q = 0` by vectorisation.
pub fn solve_lyapunov(a: &Matrix4<C64>, q: &Matrix4<C64>) -> Result<Matrix4<C64>> {
    // Column-major vec: vec(A X) = (I ⊗ A) vec X, vec(X Aᵀ) = (A ⊗ I) vec X.
    let mut big = SMatrix::<C64, 16, 16>::zeros();
    for r in 0..4 {
        for c in 0..4 {
            let row = c * 4 + r;
            for k in 0..4 {
                big[(row, c * 4 + k)] += a[(r, k)];
                big[(row, k * 4 + r)] += a[(c, k)];
            }
        }
    }
    let rhs = SVector::<C64, 16>::from_iterator(q.iter().map(|z| -z));
    let x = big.lu().solve(&rhs).ok_or(Error::Singular("Lyapunov operator"))?;
    if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Singular("Lyapunov operator"));
    }
    Ok(Matrix4::from_iterator(x.iter().copied()))
}

/// Steady normal-ordered covariance of `z` for a stable linear chain.
pub fn lyapunov_covariance(sys: &LinearSystem) -> Result<Matrix4<C64>> {
    let max_re_eig = sys.max_growth_rate();
    if max_re_eig >= 0.0 {
        return Err(Error::Unstable { max_re_eig });
    }
    solve_lyapunov(&sys.j, &sys.d)
}

/// Covariance of the boxcar-filtered `(I, Q)` for a window of length `t_filter`
/// opened on the stationary state `c`, including `n_cl` classical noise.
pub fn filtered_covariance_of(
    sys: &LinearSystem,
    c: &Matrix4<C64>,
    t_filter: f64,
    n_cl: f64,
) -> Result<Matrix2<f64>> {
    if !(t_filter > 0.0) {
        return Err(Error::InvalidParameter(format!("filter window must be > 0, got {t_filter}")));
    }
    let max_re_eig = sys.max_growth_rate();
    if max_re_eig >= 0.0 {
        return Err(Error::Unstable { max_re_eig });
    }
    let j = &sys.j;
    let jinv = j.try_inverse().ok_or(Error::Singular("drift matrix"))?;
    let jinv_t = jinv.transpose();
    let eye = Matrix4::<C64>::identity();
    let decay = (j * C64::new(t_filter, 0.0)).exp();
    let finite = (c * jinv_t * jinv_t * (eye - decay.transpose())
        + jinv * jinv * (eye - decay) * c)
        / C64::new(t_filter, 0.0);
    let inner = c * jinv_t + jinv * c + finite;
    let m = readout_matrix(sys.gamma_h);
    let proj = m * inner * m.transpose();
    let sigma = Matrix2::from_diagonal_element(0.5 * (1.0 + n_cl)) - proj.map(|z| z.re * 0.5);
    let imag = proj.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let scale = proj.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if imag > 1e-8 * scale {
        return Err(Error::NonFinite("filtered covariance has an imaginary part"));
    }
    Ok(sigma)
}

pub fn filtered_covariance(sys: &LinearSystem, t_filter: f64, n_cl: f64) -> Result<Matrix2<f64>> {
    let c = lyapunov_covariance(sys)?;
    filtered_covariance_of(sys, &c, t_filter, n_cl)
}

/// Minor-axis angle of the detected squeezed ellipse for squeezer pump
/// phase `phi1`, in `(-π/2, π/2]`.
pub fn squeezing_axis(phi1: f64) -> f64 {
    wrap_half_turn(FRAC_PI_4 - phi1 / 2.0)
}

/// Wraps an axis angle (defined mod π) into `(-π/2, π/2]`.
pub fn wrap_half_turn(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(PI);
    if t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

/// Power gain in dB of the amplified quadrature of the isolated analyzer on
/// resonance, with `Γ` counted in its linewidth.
pub fn analyzer_gain_db(p: &ChainParams) -> Result<f64> {
    let th = threshold(p, Mode::Analyzer);
    if p.g2 >= th {
        return Err(Error::AboveThreshold { mode: "analyzer", g: p.g2, threshold: th });
    }
    let half = p.analyzer_linewidth() / 2.0;
    let ratio = (half + p.g2) / (half - p.g2);
    if !(ratio > 0.0) {
        return Err(Error::AboveThreshold { mode: "analyzer", g: p.g2, threshold: half });
    }
    Ok(20.0 * ratio.log10())
}

/// Inverse of [`analyzer_gain_db`] in `g2`.
pub fn g2_for_gain_db(p: &ChainParams, gain_db: f64) -> f64 {
    let r = 10f64.powf(gain_db / 20.0);
    p.analyzer_linewidth() / 2.0 * (r - 1.0) / (r + 1.0)
}
