//! Weak-Kerr expansion of the analyzer steady state.
//!
//! The analyzer mean is expanded as `<s2> = Λ^{-1/2} s̄ + Λ^{1/2} u + …` and
//! its cumulants as `C = C̄ + Λ C' + …`, with the drive held at fixed
//! `η√Λ`. Only the leading mean equation is nonlinear; every further order
//! is a linear solve around the dressed drift.

use nalgebra::{Matrix2, Matrix4, Vector2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::{build_linear_system, eigenvalues2, max_growth_rate, quadrature_map, solve_lyapunov, S1, S1D, S2, S2D};
use crate::measurement::{class_params, Encoding};
use crate::metrics::fisher_discriminant;
use crate::params::ChainParams;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Orders of the expansion: mean `Λ^α`, its correction `Λ^β`, cumulants
/// `Λ^p` and their correction `Λ^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
}

pub const EXPONENTS: Exponents = Exponents { alpha: -0.5, beta: 0.5, p: 0.0, q: 1.0 };

/// Leading-order scaled analyzer mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZerothMean {
    pub s2_bar: C64,
    /// More than one linearly stable root of the classical equation exists;
    /// `s2_bar` is the branch continued from zero drive.
    pub multistable: bool,
}

fn scaled_drive(p: &ChainParams) -> C64 {
    C64::from_polar(p.kappa2.sqrt() * p.eta_d2 * p.lambda.sqrt(), p.phi_d2)
}

/// Residual of the classical mean equation for the scaled amplitude.
fn mean_residual(p: &ChainParams, drive: C64, s: C64) -> C64 {
    let pump = C64::from_polar(p.g2, p.phi2);
    C64::new(-p.analyzer_linewidth() / 2.0, p.delta2) * s - I * pump * s.conj() - drive + I * s.norm_sqr() * s
}

/// Dressed analyzer drift around the scaled mean `s`.
pub fn dressed_jacobian(p: &ChainParams, s: C64) -> Matrix2<C64> {
    let pump = C64::from_polar(p.g2, p.phi2);
    let diag = C64::new(-p.analyzer_linewidth() / 2.0, p.delta2) + 2.0 * I * s.norm_sqr();
    let off = -I * pump + I * s * s;
    Matrix2::new(diag, off, off.conj(), diag.conj())
}

fn newton(p: &ChainParams, drive: C64, start: C64) -> Option<C64> {
    let mut s = start;
    let mut r = mean_residual(p, drive, s).norm();
    for _ in 0..100 {
        if r < 1e-14 * (1.0 + s.norm()) {
            return Some(s);
        }
        let f = mean_residual(p, drive, s);
        let step = dressed_jacobian(p, s).lu().solve(&Vector2::new(f, f.conj()))?;
        let mut damp = 1.0;
        loop {
            let t = s - step[0] * damp;
            let rt = mean_residual(p, drive, t).norm();
            if rt < r || damp < 1e-6 {
                s = t;
                r = rt;
                break;
            }
            damp /= 2.0;
        }
        if !s.re.is_finite() || !s.im.is_finite() {
            return None;
        }
    }
    (r < 1e-12 * (1.0 + s.norm())).then_some(s)
}

fn is_stable_root(p: &ChainParams, s: C64) -> bool {
    eigenvalues2(&dressed_jacobian(p, s)).iter().all(|z| z.re < 0.0)
}

const RAMP_STEPS: usize = 32;

/// Solves the scaled classical mean equation by damped Newton, following the
/// branch from zero drive in [`RAMP_STEPS`] increments.
pub fn solve_zeroth_mean(p: &ChainParams) -> Result<ZerothMean> {
    p.validate()?;
    let drive = scaled_drive(p);
    let stable_roots = |d: C64| {
        let mut found: Vec<C64> = Vec::new();
        for r in [0.3, 1.0, 2.0, 4.0] {
            for k in 0..8 {
                let start = C64::from_polar(r, k as f64 * std::f64::consts::FRAC_PI_4);
                if let Some(root) = newton(p, d, start) {
                    if is_stable_root(p, root) && found.iter().all(|x| (x - root).norm() > 1e-7) {
                        found.push(root);
                    }
                }
            }
        }
        found
    };
    let mut s = C64::default();
    let mut jumped = false;
    for k in 1..=RAMP_STEPS {
        let d = drive * (k as f64 / RAMP_STEPS as f64);
        s = match newton(p, d, s).filter(|r| is_stable_root(p, *r)) {
            Some(r) => r,
            None => {
                // The branch ended at a fold: land on the nearest stable root.
                jumped = true;
                let prev = s;
                stable_roots(d)
                    .into_iter()
                    .min_by(|a, b| (a - prev).norm().total_cmp(&(b - prev).norm()))
                    .ok_or_else(|| {
                        Error::NoConvergence(format!("zeroth-order mean at ramp step {k}/{RAMP_STEPS}"))
                    })?
            }
        };
    }
    let mut stable = stable_roots(drive);
    if stable.iter().all(|x| (x - s).norm() > 1e-7) {
        stable.push(s);
    }
    Ok(ZerothMean { s2_bar: s, multistable: stable.len() > 1 || jumped })
}

/// Full 4×4 drift with the analyzer block dressed by the scaled mean.
fn dressed_system(p: &ChainParams, s: C64) -> (Matrix4<C64>, Matrix4<C64>) {
    let lin = build_linear_system(p);
    let mut j = lin.j;
    let mut d = lin.d;
    j.fixed_view_mut::<2, 2>(2, 2).copy_from(&dressed_jacobian(p, s));
    d[(S2, S2)] += I * s * s;
    d[(S2D, S2D)] -= I * (s * s).conj();
    (j, d)
}

/// Zeroth-order cumulants of one input class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCumulants {
    /// Normal-ordered covariance over `(s1, s1†, s2, s2†)`.
    pub c: Matrix4<C64>,
    /// First-order mean correction `u`.
    pub u: C64,
}

impl ClassCumulants {
    pub fn c22(&self) -> C64 {
        self.c[(S2, S2)]
    }
    pub fn c2d2(&self) -> C64 {
        self.c[(S2, S2D)]
    }
    pub fn c2d2d(&self) -> C64 {
        self.c[(S2D, S2D)]
    }

    /// Mixing matrix of the mean-correction equation.
    fn kerr_mixing(&self) -> Matrix2<C64> {
        kerr_mixing(self.c22(), self.c2d2(), self.c2d2d())
    }
}

fn kerr_mixing(c22: C64, n: C64, c2d2d: C64) -> Matrix2<C64> {
    Matrix2::new(2.0 * n, c22, -c2d2d, -2.0 * n)
}

/// Zeroth-order cumulants of the class described by `p`, around `s2_bar`.
pub fn zeroth_cumulants(p: &ChainParams, s2_bar: C64) -> Result<Matrix4<C64>> {
    let (j, d) = dressed_system(p, s2_bar);
    let max_re_eig = max_growth_rate(&j);
    if max_re_eig >= 0.0 {
        return Err(Error::Unstable { max_re_eig });
    }
    solve_lyapunov(&j, &d)
}

/// First-order mean correction `u` given the zeroth-order solution.
pub fn first_order_mean(p: &ChainParams, s2_bar: C64, c: &Matrix4<C64>) -> Result<C64> {
    let k = kerr_mixing(c[(S2, S2)], c[(S2, S2D)], c[(S2D, S2D)]);
    let rhs = k * Vector2::new(s2_bar, s2_bar.conj()) * (-I);
    let v = dressed_jacobian(p, s2_bar).lu().solve(&rhs).ok_or(Error::Singular("dressed Jacobian"))?;
    Ok(v[0])
}

/// First-order cumulant correction `C'` (so that `C ≈ C̄ + Λ C'`).
pub fn first_order_cumulants(p: &ChainParams, s2_bar: C64, c: &Matrix4<C64>, u: C64) -> Result<Matrix4<C64>> {
    let (j, _) = dressed_system(p, s2_bar);
    let s = s2_bar;
    let (c22, n, c2d2d) = (c[(S2, S2)], c[(S2, S2D)], c[(S2D, S2D)]);
    let (c12, c1d2, c2d1, c1d2d) = (c[(S1, S2)], c[(S1D, S2)], c[(S1, S2D)], c[(S1D, S2D)]);
    let cross = s * u.conj() + s.conj() * u;
    let src22 = I * (c22 + 6.0 * c22 * n + 2.0 * s * u * (1.0 + 2.0 * n) + 4.0 * cross * c22);
    let src2d2 = I * (2.0 * s * u * c2d2d - 2.0 * (s * u).conj() * c22);
    let src12 = I * (c2d1 * c22 + 2.0 * c12 * n + 2.0 * s * u * c2d1 + 2.0 * c12 * cross);
    let src1d2 = I * (2.0 * c1d2 * n + c1d2d * c22 + 2.0 * s * u * c1d2d + 2.0 * c1d2 * cross);
    let mut q = Matrix4::zeros();
    q[(S2, S2)] = src22;
    q[(S2D, S2D)] = src22.conj();
    q[(S2, S2D)] = src2d2;
    q[(S2D, S2)] = src2d2;
    q[(S1, S2)] = src12;
    q[(S2, S1)] = src12;
    q[(S1D, S2D)] = src12.conj();
    q[(S2D, S1D)] = src12.conj();
    q[(S1D, S2)] = src1d2;
    q[(S2, S1D)] = src1d2;
    q[(S1, S2D)] = src1d2.conj();
    q[(S2D, S1)] = src1d2.conj();
    solve_lyapunov(&j, &q)
}

/// Perturbative description of both input classes at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbativeSolution {
    pub lambda: f64,
    pub s2_bar: C64,
    pub multistable: bool,
    pub j_bar: Matrix2<C64>,
    pub classes: [ClassCumulants; 2],
}

impl PerturbativeSolution {
    pub fn exponents(&self) -> Exponents {
        EXPONENTS
    }

    /// `<s2>` of class `label` through first order.
    pub fn analyzer_mean(&self, label: u8) -> C64 {
        let u = self.classes[(label - 1) as usize].u;
        if self.lambda == 0.0 {
            return C64::default();
        }
        self.s2_bar / self.lambda.sqrt() + u * self.lambda.sqrt()
    }
}

pub fn solve_perturbative(p: &ChainParams, encoding: Encoding) -> Result<PerturbativeSolution> {
    let zm = solve_zeroth_mean(p)?;
    let s = zm.s2_bar;
    let class = |label: u8| -> Result<ClassCumulants> {
        let q = class_params(p, encoding, label)?;
        let c = zeroth_cumulants(&q, s)?;
        let u = first_order_mean(&q, s, &c)?;
        Ok(ClassCumulants { c, u })
    };
    Ok(PerturbativeSolution {
        lambda: p.lambda,
        s2_bar: s,
        multistable: zm.multistable,
        j_bar: dressed_jacobian(p, s),
        classes: [class(1)?, class(2)?],
    })
}

/// Class-1-minus-class-2 mean separation of the filtered quadratures:
/// `i √(Λ𝒯) U J̄⁻¹ ΔK [s̄, s̄*]ᵀ`, with `ΔK` built from `C̄⁽²⁾ − C̄⁽¹⁾`.
pub fn perturbative_delta_mu(sol: &PerturbativeSolution, t_filter: f64) -> Result<Vector2<f64>> {
    let [a, b] = &sol.classes;
    let dk = b.kerr_mixing() - a.kerr_mixing();
    let s = Vector2::new(sol.s2_bar, sol.s2_bar.conj());
    let jinv = sol.j_bar.try_inverse().ok_or(Error::Singular("dressed Jacobian"))?;
    let pref = I * (sol.lambda * t_filter).sqrt();
    let v = quadrature_map() * jinv * dk * s * pref;
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if v.iter().any(|z| z.im.abs() > 1e-10 * scale.max(1.0)) {
        return Err(Error::NonFinite("perturbative mean separation is not real"));
    }
    Ok(Vector2::new(v[0].re, v[1].re))
}

/// Combined covariance estimate `½𝕀 + ½ U (C̄⁽¹⁾ + C̄⁽²⁾) Uᵀ` over
/// `(s2, s2†)`, i.e. the class average of the symmetrised intracavity
/// quadrature covariance.
pub fn perturbative_v(sol: &PerturbativeSolution) -> Matrix2<f64> {
    let sum = |f: fn(&ClassCumulants) -> C64| f(&sol.classes[0]) + f(&sol.classes[1]);
    let n = sum(ClassCumulants::c2d2);
    let block = Matrix2::new(sum(ClassCumulants::c22), n, n, sum(ClassCumulants::c2d2d));
    let u = quadrature_map();
    Matrix2::from_diagonal_element(0.5) + (u * block * u.transpose()).map(|z| z.re * 0.5)
}

pub fn perturbative_fisher(sol: &PerturbativeSolution, t_filter: f64) -> Result<f64> {
    fisher_discriminant(&perturbative_delta_mu(sol, t_filter)?, &perturbative_v(sol))
}
