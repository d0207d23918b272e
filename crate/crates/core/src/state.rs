//! The closed set of first- and second-order cumulants of the two modes.

use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Means and normal-ordered second cumulants of the squeezer (`s1`) and
/// analyzer (`s2`) modes.
///
/// Conjugate pairs are carried redundantly; [`CumulantState::hermiticity_defect`]
/// measures how far a state is from the physical (Hermitian) subspace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CumulantState {
    pub s1: C64,
    pub s2: C64,
    pub s1d: C64,
    pub s2d: C64,
    pub c_s1s1: C64,
    pub c_s1s2: C64,
    pub c_s2s2: C64,
    pub c_s1ds1: C64,
    pub c_s1ds2: C64,
    pub c_s2ds1: C64,
    pub c_s2ds2: C64,
    pub c_s1ds1d: C64,
    pub c_s1ds2d: C64,
    pub c_s2ds2d: C64,
}

pub const STATE_LEN: usize = 14;

impl CumulantState {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn to_array(&self) -> [C64; STATE_LEN] {
        [
            self.s1, self.s2, self.s1d, self.s2d, self.c_s1s1, self.c_s1s2, self.c_s2s2,
            self.c_s1ds1, self.c_s1ds2, self.c_s2ds1, self.c_s2ds2, self.c_s1ds1d, self.c_s1ds2d,
            self.c_s2ds2d,
        ]
    }

    pub fn from_array(a: [C64; STATE_LEN]) -> Self {
        Self {
            s1: a[0],
            s2: a[1],
            s1d: a[2],
            s2d: a[3],
            c_s1s1: a[4],
            c_s1s2: a[5],
            c_s2s2: a[6],
            c_s1ds1: a[7],
            c_s1ds2: a[8],
            c_s2ds1: a[9],
            c_s2ds2: a[10],
            c_s1ds1d: a[11],
            c_s1ds2d: a[12],
            c_s2ds2d: a[13],
        }
    }

    /// Builds a Hermitian state from the independent entries.
    pub fn hermitian(
        s1: C64,
        s2: C64,
        c_s1s1: C64,
        c_s1s2: C64,
        c_s2s2: C64,
        n1: f64,
        c_s1ds2: C64,
        n2: f64,
    ) -> Self {
        Self {
            s1,
            s2,
            s1d: s1.conj(),
            s2d: s2.conj(),
            c_s1s1,
            c_s1s2,
            c_s2s2,
            c_s1ds1: C64::new(n1, 0.0),
            c_s1ds2,
            c_s2ds1: c_s1ds2.conj(),
            c_s2ds2: C64::new(n2, 0.0),
            c_s1ds1d: c_s1s1.conj(),
            c_s1ds2d: c_s1s2.conj(),
            c_s2ds2d: c_s2s2.conj(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entry modulus.
    pub fn norm_inf(&self) -> f64 {
        self.to_array().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest violation of the conjugation relations between paired entries
    /// (and of reality of the two occupation cumulants).
    pub fn hermiticity_defect(&self) -> f64 {
        [
            (self.s1d - self.s1.conj()).norm(),
            (self.s2d - self.s2.conj()).norm(),
            (self.c_s1ds1d - self.c_s1s1.conj()).norm(),
            (self.c_s2ds2d - self.c_s2s2.conj()).norm(),
            (self.c_s1ds2d - self.c_s1s2.conj()).norm(),
            (self.c_s2ds1 - self.c_s1ds2.conj()).norm(),
            self.c_s1ds1.im.abs(),
            self.c_s2ds2.im.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Projects onto the Hermitian subspace by averaging conjugate pairs.
    pub fn symmetrized(&self) -> Self {
        let avg = |a: C64, b: C64| (a + b.conj()) * 0.5;
        let s1 = avg(self.s1, self.s1d);
        let s2 = avg(self.s2, self.s2d);
        let c11 = avg(self.c_s1s1, self.c_s1ds1d);
        let c12 = avg(self.c_s1s2, self.c_s1ds2d);
        let c22 = avg(self.c_s2s2, self.c_s2ds2d);
        let c1d2 = avg(self.c_s1ds2, self.c_s2ds1);
        Self::hermitian(s1, s2, c11, c12, c22, self.c_s1ds1.re, c1d2, self.c_s2ds2.re)
    }

    /// Analyzer quadrature means `(<I2>, <Q2>)` with `I2 = (s2 + s2†)/√2`,
    /// `Q2 = -i (s2 - s2†)/√2`.
    pub fn analyzer_quadratures(&self) -> [f64; 2] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let i = (self.s2 + self.s2d) * r;
        let q = (self.s2 - self.s2d) * C64::new(0.0, -r);
        [i.re, q.re]
    }

    /// The 4×4 normal-ordered covariance matrix over `(s1, s1†, s2, s2†)`.
    pub fn covariance_matrix(&self) -> nalgebra::Matrix4<C64> {
        nalgebra::Matrix4::new(
            self.c_s1s1, self.c_s1ds1, self.c_s1s2, self.c_s2ds1,
            self.c_s1ds1, self.c_s1ds1d, self.c_s1ds2, self.c_s1ds2d,
            self.c_s1s2, self.c_s1ds2, self.c_s2s2, self.c_s2ds2,
            self.c_s2ds1, self.c_s1ds2d, self.c_s2ds2, self.c_s2ds2d,
        )
    }

    /// Overwrites the second cumulants from a 4×4 covariance over `(s1, s1†, s2, s2†)`.
    pub fn set_covariance(&mut self, c: &nalgebra::Matrix4<C64>) {
        self.c_s1s1 = c[(0, 0)];
        self.c_s1ds1 = c[(1, 0)];
        self.c_s1s2 = c[(0, 2)];
        self.c_s2ds1 = c[(3, 0)];
        self.c_s1ds1d = c[(1, 1)];
        self.c_s1ds2 = c[(1, 2)];
        self.c_s1ds2d = c[(1, 3)];
        self.c_s2s2 = c[(2, 2)];
        self.c_s2ds2 = c[(3, 2)];
        self.c_s2ds2d = c[(3, 3)];
    }

    pub fn means(&self) -> nalgebra::Vector4<C64> {
        nalgebra::Vector4::new(self.s1, self.s1d, self.s2, self.s2d)
    }
}

fn zip(a: &CumulantState, b: &CumulantState, f: impl Fn(C64, C64) -> C64) -> CumulantState {
    let (x, y) = (a.to_array(), b.to_array());
    CumulantState::from_array(std::array::from_fn(|k| f(x[k], y[k])))
}

impl Add for CumulantState {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        zip(&self, &rhs, |a, b| a + b)
    }
}

impl Sub for CumulantState {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        zip(&self, &rhs, |a, b| a - b)
    }
}

impl AddAssign for CumulantState {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Mul<f64> for CumulantState {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        CumulantState::from_array(self.to_array().map(|z| z * rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn array_round_trip_and_covariance_layout() {
        let a: [C64; STATE_LEN] = std::array::from_fn(|k| C64::new(k as f64, -(k as f64)));
        let s = CumulantState::from_array(a);
        assert_eq!(s.to_array(), a);

        let c = s.covariance_matrix();
        let mut t = CumulantState::default();
        t.set_covariance(&c);
        assert_eq!(t.c_s1ds2, s.c_s1ds2);
        assert_eq!(t.c_s2ds1, s.c_s2ds1);
        assert_eq!(t.c_s2ds2d, s.c_s2ds2d);
        assert_eq!(c, c.transpose());
    }

    #[test]
    fn symmetrized_is_hermitian() {
        let a: [C64; STATE_LEN] = std::array::from_fn(|k| C64::new(k as f64 * 0.3, 1.0 - k as f64));
        let s = CumulantState::from_array(a).symmetrized();
        assert!(s.hermiticity_defect() < 1e-15);
    }

    #[test]
    fn quadratures_of_real_mean() {
        let s = CumulantState::hermitian(
            C64::default(),
            C64::new(1.0, 0.0),
            C64::default(),
            C64::default(),
            C64::default(),
            0.0,
            C64::default(),
            0.0,
        );
        let [i, q] = s.analyzer_quadratures();
        assert!((i - 2f64.sqrt()).abs() < 1e-15);
        assert!(q.abs() < 1e-15);
    }
}
