//! Class separation metrics: mean separation, combined covariance, Fisher
//! discriminant and quadratic-discriminant fidelity.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::ShotRecord;
use crate::state::CumulantState;

/// Per-class statistics of filtered shots and the derived separation metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub mu1: Vector2<f64>,
    pub mu2: Vector2<f64>,
    pub sigma1: Matrix2<f64>,
    pub sigma2: Matrix2<f64>,
    /// Average of the two class covariances.
    pub v: Matrix2<f64>,
    pub delta_mu: Vector2<f64>,
    pub d_f: f64,
    pub fidelity: f64,
}

fn points(shots: &[ShotRecord]) -> Vec<Vector2<f64>> {
    shots.iter().map(|s| Vector2::new(s.i, s.q)).collect()
}

pub fn sample_mean(xs: &[Vector2<f64>]) -> Vector2<f64> {
    xs.iter().sum::<Vector2<f64>>() / xs.len() as f64
}

/// Unbiased sample covariance.
pub fn sample_covariance(xs: &[Vector2<f64>]) -> Matrix2<f64> {
    let m = sample_mean(xs);
    xs.iter().map(|x| (x - m) * (x - m).transpose()).sum::<Matrix2<f64>>() / (xs.len() as f64 - 1.0)
}

fn check_class(xs: &[Vector2<f64>], label: u8) -> Result<()> {
    if xs.len() < 2 {
        return Err(Error::EmptyClass(label));
    }
    Ok(())
}

/// `Δμ = μ1 − μ2` and its Euclidean norm.
pub fn mean_separation(shots1: &[ShotRecord], shots2: &[ShotRecord]) -> Result<(Vector2<f64>, f64)> {
    let (a, b) = (points(shots1), points(shots2));
    check_class(&a, 1)?;
    check_class(&b, 2)?;
    let d = sample_mean(&a) - sample_mean(&b);
    Ok((d, d.norm()))
}

/// `Δμᵀ V⁻¹ Δμ`.
pub fn fisher_discriminant(delta_mu: &Vector2<f64>, v: &Matrix2<f64>) -> Result<f64> {
    let inv = v.try_inverse().ok_or(Error::Singular("combined covariance"))?;
    let d = (delta_mu.transpose() * inv * delta_mu)[0];
    if !d.is_finite() {
        return Err(Error::Singular("combined covariance"));
    }
    Ok(d.max(0.0))
}

/// Adds `n_cl` of classical noise to both quadratures.
pub fn augment_classical_noise(sigma: &Matrix2<f64>, n_cl: f64) -> Matrix2<f64> {
    sigma + Matrix2::from_diagonal_element(n_cl)
}

/// Whether the classifier is scored on the shots it was fit to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityMode {
    #[default]
    Resubstitution,
    /// Fit on even-indexed shots of each class, score on odd-indexed ones.
    HeldOut,
}

/// Gaussian class model with regularised covariance.
#[derive(Debug, Clone, Copy)]
pub struct GaussianClass {
    mean: Vector2<f64>,
    inv: Matrix2<f64>,
    log_det: f64,
}

impl GaussianClass {
    pub fn fit(xs: &[Vector2<f64>]) -> Result<Self> {
        let mean = sample_mean(xs);
        let mut cov = sample_covariance(xs);
        let eps = 1e-9 * cov.trace() / 2.0;
        cov += Matrix2::from_diagonal_element(eps);
        let det = cov.determinant();
        let inv = cov.try_inverse().filter(|_| det > 0.0).ok_or(Error::Singular("class covariance"))?;
        Ok(Self { mean, inv, log_det: det.ln() })
    }

    pub fn log_likelihood(&self, x: &Vector2<f64>) -> f64 {
        let d = x - self.mean;
        -0.5 * ((d.transpose() * self.inv * d)[0] + self.log_det)
    }
}

/// Fraction of shots assigned to their own class by a two-class quadratic
/// discriminant with equal priors. Ties go to class 1.
pub fn qda_fidelity(shots1: &[ShotRecord], shots2: &[ShotRecord], mode: FidelityMode) -> Result<f64> {
    let (a, b) = (points(shots1), points(shots2));
    let split = |xs: &[Vector2<f64>], r: usize| -> Vec<Vector2<f64>> {
        xs.iter().enumerate().filter(|(k, _)| k % 2 == r).map(|(_, x)| *x).collect()
    };
    let (fit1, fit2, test1, test2) = match mode {
        FidelityMode::Resubstitution => (a.clone(), b.clone(), a, b),
        FidelityMode::HeldOut => (split(&a, 0), split(&b, 0), split(&a, 1), split(&b, 1)),
    };
    check_class(&fit1, 1)?;
    check_class(&fit2, 2)?;
    check_class(&test1, 1)?;
    check_class(&test2, 2)?;
    let m1 = GaussianClass::fit(&fit1)?;
    let m2 = GaussianClass::fit(&fit2)?;
    let is_one = |x: &Vector2<f64>| m1.log_likelihood(x) >= m2.log_likelihood(x);
    let right = test1.iter().filter(|x| is_one(x)).count() + test2.iter().filter(|x| !is_one(x)).count();
    Ok(right as f64 / (test1.len() + test2.len()) as f64)
}

impl ClassStats {
    pub fn from_shots(shots1: &[ShotRecord], shots2: &[ShotRecord], mode: FidelityMode) -> Result<Self> {
        let (a, b) = (points(shots1), points(shots2));
        check_class(&a, 1)?;
        check_class(&b, 2)?;
        let (mu1, mu2) = (sample_mean(&a), sample_mean(&b));
        let (sigma1, sigma2) = (sample_covariance(&a), sample_covariance(&b));
        let v = (sigma1 + sigma2) / 2.0;
        let delta_mu = mu1 - mu2;
        Ok(Self {
            mu1,
            mu2,
            sigma1,
            sigma2,
            v,
            delta_mu,
            d_f: fisher_discriminant(&delta_mu, &v)?,
            fidelity: qda_fidelity(shots1, shots2, mode)?,
        })
    }
}

/// Symmetrised covariance of the analyzer quadratures `I2 = (s2 + s2†)/√2`,
/// `Q2 = -i(s2 − s2†)/√2` from the normal-ordered cumulants.
pub fn intracavity_covariance_proxy(x: &CumulantState) -> Result<Matrix2<f64>> {
    if !x.is_finite() {
        return Err(Error::NonFinite("cumulant state"));
    }
    let (c22, n, c2d2d) = (x.c_s2s2, x.c_s2ds2, x.c_s2ds2d);
    let di = 0.5 + (c22 + c2d2d + 2.0 * n).re / 2.0;
    let dq = 0.5 + (2.0 * n - c22 - c2d2d).re / 2.0;
    let diq = c22.im;
    Ok(Matrix2::new(di, diq, diq, dq))
}

/// Separation metrics computed from two noise-averaged steady states,
/// normalised by the filter window: `‖Δμ‖/√𝒯` and `D_F/𝒯`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyMetrics {
    /// `(ΔI2, ΔQ2)`, class 1 minus class 2.
    pub delta_mu: Vector2<f64>,
    pub v: Matrix2<f64>,
    pub delta_mu_norm: f64,
    pub fisher_norm: f64,
}

pub fn steady_metrics(x1: &CumulantState, x2: &CumulantState, n_cl: f64) -> Result<SteadyMetrics> {
    let [i1, q1] = x1.analyzer_quadratures();
    let [i2, q2] = x2.analyzer_quadratures();
    let delta_mu = Vector2::new(i1 - i2, q1 - q2);
    let v = (intracavity_covariance_proxy(x1)? + intracavity_covariance_proxy(x2)?) / 2.0;
    let v = augment_classical_noise(&v, n_cl);
    Ok(SteadyMetrics { delta_mu, v, delta_mu_norm: delta_mu.norm(), fisher_norm: fisher_discriminant(&delta_mu, &v)? })
}

/// Principal minor-axis angle of a 2×2 covariance, in `(-π/2, π/2]`.
pub fn minor_axis_angle(sigma: &Matrix2<f64>) -> f64 {
    // major axis at θ with tan 2θ = 2σ_xy/(σ_xx − σ_yy)
    let major = 0.5 * (2.0 * sigma[(0, 1)]).atan2(sigma[(0, 0)] - sigma[(1, 1)]);
    crate::linear::wrap_half_turn(major + std::f64::consts::FRAC_PI_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn shot(label: u8, i: f64, q: f64) -> ShotRecord {
        ShotRecord { class_label: label, i, q, seed: 0, t_filter: 1.0 }
    }

    fn cloud(label: u8, n: usize, mean: (f64, f64), sd: (f64, f64), seed: u64) -> Vec<ShotRecord> {
        let mut rng = substream(seed, Purpose::Auxiliary, label as u64);
        (0..n)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                shot(label, mean.0 + sd.0 * a, mean.1 + sd.1 * b)
            })
            .collect()
    }

    #[test]
    fn separation_of_unit_points() {
        let a = vec![shot(1, 1.0, 0.0), shot(1, 1.0, 0.0)];
        let b = vec![shot(2, 0.0, 1.0), shot(2, 0.0, 1.0)];
        let (d, n) = mean_separation(&a, &b).unwrap();
        assert_eq!(d, Vector2::new(1.0, -1.0));
        assert!((n - 2f64.sqrt()).abs() < 1e-15);
        let (d, n) = mean_separation(&a, &a).unwrap();
        assert_eq!((d, n), (Vector2::zeros(), 0.0));
        assert_eq!(mean_separation(&a[..1], &b), Err(Error::EmptyClass(1)));
    }

    #[test]
    fn fisher_on_identity() {
        let d = fisher_discriminant(&Vector2::new(3.0, 4.0), &Matrix2::identity()).unwrap();
        assert_eq!(d, 25.0);
        assert!(fisher_discriminant(&Vector2::new(1.0, 0.0), &Matrix2::zeros()).is_err());
    }

    #[test]
    fn fidelity_extremes() {
        let a = cloud(1, 200, (0.0, 0.0), (0.1, 0.1), 1);
        let b = cloud(2, 200, (10.0, 0.0), (0.1, 0.1), 2);
        assert_eq!(qda_fidelity(&a, &b, FidelityMode::Resubstitution).unwrap(), 1.0);
        assert_eq!(qda_fidelity(&a, &b, FidelityMode::HeldOut).unwrap(), 1.0);

        let all = cloud(1, 400, (0.0, 0.0), (1.0, 1.0), 3);
        let (x, y): (Vec<_>, Vec<_>) = all.iter().enumerate().partition(|(k, _)| k % 2 == 0);
        let x: Vec<_> = x.into_iter().map(|(_, s)| *s).collect();
        let y: Vec<_> = y.into_iter().map(|(_, s)| *s).collect();
        let f = qda_fidelity(&x, &y, FidelityMode::Resubstitution).unwrap();
        assert!((f - 0.5).abs() < 0.1, "{f}");
    }

    #[test]
    fn qda_uses_covariance_difference() {
        // Same mean, different spread: a linear rule would sit at chance.
        let a = cloud(1, 2000, (0.0, 0.0), (0.3, 0.3), 4);
        let b = cloud(2, 2000, (0.0, 0.0), (3.0, 3.0), 5);
        let f = qda_fidelity(&a, &b, FidelityMode::Resubstitution).unwrap();
        // Analytic optimum for isotropic σ = 0.3 vs 3 in 2D: radius² threshold
        // r² = 2 ln(100) σ1² σ2² / (σ2² − σ1²); P(correct) from χ²₂ tails.
        let (s1, s2) = (0.09f64, 9.0f64);
        let r2 = 2.0 * (s2 / s1).ln() * s1 * s2 / (s2 - s1);
        let p1 = 1.0 - (-r2 / (2.0 * s1)).exp();
        let p2 = (-r2 / (2.0 * s2)).exp();
        let expect = 0.5 * (p1 + p2);
        assert!((f - expect).abs() < 0.02, "{f} vs {expect}");
    }

    #[test]
    fn ties_go_to_class_one() {
        let a = vec![shot(1, -1.0, 0.0), shot(1, 1.0, 0.0), shot(1, 0.0, 1.0), shot(1, 0.0, -1.0)];
        let f = qda_fidelity(&a, &a, FidelityMode::Resubstitution).unwrap();
        assert_eq!(f, 0.5);
    }

    #[test]
    fn vacuum_proxy_is_half_identity() {
        let v = intracavity_covariance_proxy(&CumulantState::vacuum()).unwrap();
        assert_eq!(v, Matrix2::from_diagonal_element(0.5));
    }

    #[test]
    fn noise_augmentation() {
        let s = Matrix2::new(1.0, 0.2, 0.2, 0.5);
        assert_eq!(augment_classical_noise(&s, 2.0), Matrix2::new(3.0, 0.2, 0.2, 2.5));
    }

    #[test]
    fn axis_of_tilted_ellipse() {
        let th = 0.3f64;
        let r = nalgebra::Rotation2::new(th).into_inner();
        let sigma = r * Matrix2::new(0.1, 0.0, 0.0, 2.0) * r.transpose();
        assert!((minor_axis_angle(&sigma) - th).abs() < 1e-12);
    }

    #[test]
    fn fisher_invariant_under_rotation() {
        let a = cloud(1, 10_000, (0.0, 0.0), (1.0, 0.3), 7);
        let b = cloud(2, 10_000, (0.5, 0.2), (0.8, 0.4), 8);
        let rot = |s: &ShotRecord| {
            let (c, d) = (0.6f64.cos(), 0.6f64.sin());
            shot(s.class_label, c * s.i - d * s.q, d * s.i + c * s.q)
        };
        let d0 = ClassStats::from_shots(&a, &b, FidelityMode::Resubstitution).unwrap().d_f;
        let ra: Vec<_> = a.iter().map(rot).collect();
        let rb: Vec<_> = b.iter().map(rot).collect();
        let d1 = ClassStats::from_shots(&ra, &rb, FidelityMode::Resubstitution).unwrap().d_f;
        assert!((d1 / d0 - 1.0).abs() < 0.02);
    }

    proptest! {
        #[test]
        fn label_swap_symmetry(seed in 0u64..1000, dx in -2.0..2.0f64, s in 0.2..2.0f64) {
            let a = cloud(1, 60, (0.0, 0.0), (1.0, 1.0), seed);
            let b = cloud(2, 60, (dx, 0.3), (s, 0.5), seed + 1);
            let f = qda_fidelity(&a, &b, FidelityMode::Resubstitution).unwrap();
            let g = qda_fidelity(&b, &a, FidelityMode::Resubstitution).unwrap();
            // only exact likelihood ties could break the symmetry
            prop_assert!((f - g).abs() <= 1.0 / 120.0 + 1e-12);
            prop_assert!((0.0..=1.0).contains(&f));
        }

        #[test]
        fn noise_never_increases_fisher(
            d in prop::array::uniform2(-3.0..3.0f64),
            l in prop::array::uniform3(-1.0..1.0f64),
            n in 0.0..10.0f64,
        ) {
            let lower = Matrix2::new(l[0].abs() + 0.1, 0.0, l[1], l[2].abs() + 0.1);
            let v = lower * lower.transpose();
            let dm = Vector2::new(d[0], d[1]);
            let f0 = fisher_discriminant(&dm, &v).unwrap();
            let f1 = fisher_discriminant(&dm, &augment_classical_noise(&v, n)).unwrap();
            prop_assert!(f1 <= f0 * (1.0 + 1e-12) + 1e-12);
            prop_assert!(f1 >= 0.0);
        }
    }
}
