//! Deterministic steady states and seeded conditional trajectories.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::{threshold, Mode};
use crate::model::Coefficients;
use crate::params::{ChainParams, SimControls};
use crate::rng::{substream, trajectory_seed, Purpose};
use crate::state::{CumulantState, STATE_LEN};

const SUSTAIN_STEPS: usize = 10;
const NEWTON_SWITCH: f64 = 1e-3;
const NEWTON_RETRY_STEPS: usize = 200;

fn to_real(x: &CumulantState) -> DVector<f64> {
    let a = x.to_array();
    DVector::from_iterator(2 * STATE_LEN, a.iter().map(|z| z.re).chain(a.iter().map(|z| z.im)))
}

fn from_real(v: &DVector<f64>) -> CumulantState {
    let mut a = [C64::default(); STATE_LEN];
    for (k, z) in a.iter_mut().enumerate() {
        *z = C64::new(v[k], v[k + STATE_LEN]);
    }
    CumulantState::from_array(a)
}

fn rk4_step(f: &Coefficients, x: &CumulantState, h: f64) -> CumulantState {
    let k1 = f.drift(x);
    let k2 = f.drift(&(*x + k1 * (h / 2.0)));
    let k3 = f.drift(&(*x + k2 * (h / 2.0)));
    let k4 = f.drift(&(*x + k3 * h));
    *x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Finite-difference Jacobian of the drift in the 28 real coordinates.
pub fn drift_jacobian(f: &Coefficients, x: &CumulantState) -> DMatrix<f64> {
    let y = to_real(x);
    let f0 = to_real(&f.drift(x));
    let n = y.len();
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let h = 1e-7 * y[j].abs().max(1.0);
        let mut yp = y.clone();
        yp[j] += h;
        let fp = to_real(&f.drift(&from_real(&yp)));
        jac.set_column(j, &((fp - &f0) / h));
    }
    jac
}

/// Largest real part among the eigenvalues of the linearised drift.
pub fn max_growth_rate_at(f: &Coefficients, x: &CumulantState) -> f64 {
    drift_jacobian(f, x)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn newton_polish(f: &Coefficients, x: &CumulantState, tol: f64) -> Option<CumulantState> {
    let mut y = to_real(x);
    for _ in 0..30 {
        let cur = from_real(&y);
        let r = to_real(&f.drift(&cur));
        if r.amax() < tol {
            return Some(cur);
        }
        let step = drift_jacobian(f, &cur).lu().solve(&r)?;
        y -= step;
        if !y.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    None
}

fn check_thresholds(p: &ChainParams) -> Result<()> {
    let th1 = threshold(p, Mode::Squeezer);
    if p.g1 >= th1 {
        return Err(Error::AboveThreshold { mode: "squeezer", g: p.g1, threshold: th1 });
    }
    let th2 = threshold(p, Mode::Analyzer);
    if p.g2 >= th2 {
        return Err(Error::AboveThreshold { mode: "analyzer", g: p.g2, threshold: th2 });
    }
    Ok(())
}

/// Steady state of the noise-averaged equations, reached from vacuum.
pub fn solve_steady(p: &ChainParams, c: &SimControls) -> Result<CumulantState> {
    solve_steady_from(p, c, &CumulantState::vacuum())
}

/// Integrates the noise-averaged equations with RK4 from `init` until the
/// drift stays below `steady_tol` for ten consecutive steps. Once the drift
/// is small a Newton step on the fixed-point equations short-cuts the slow
/// tail; its result is only accepted if subsequent RK4 steps stay put.
pub fn solve_steady_from(
    p: &ChainParams,
    c: &SimControls,
    init: &CumulantState,
) -> Result<CumulantState> {
    p.validate()?;
    c.validate()?;
    if !init.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    check_thresholds(p)?;
    let f = Coefficients::new(p);
    let tol = c.steady_tol;
    let mut x = *init;
    let mut h = c.ode_dt;
    let mut t = 0.0;
    let mut quiet = 0;
    let mut last_newton: Option<usize> = None;
    let mut steps = 0usize;

    while t < c.t_max {
        let r = f.drift(&x).norm_inf();
        if r < tol {
            quiet += 1;
            if quiet >= SUSTAIN_STEPS {
                return Ok(x);
            }
        } else {
            quiet = 0;
        }
        if r < NEWTON_SWITCH
            && quiet == 0
            && last_newton.is_none_or(|s| steps - s >= NEWTON_RETRY_STEPS)
        {
            last_newton = Some(steps);
            if let Some(y) = newton_polish(&f, &x, tol * 0.1) {
                let mut z = y;
                let held = (0..SUSTAIN_STEPS).all(|_| {
                    z = rk4_step(&f, &z, h);
                    f.drift(&z).norm_inf() < tol
                });
                if held {
                    return Ok(z);
                }
            }
        }
        let next = rk4_step(&f, &x, h);
        if !next.is_finite() {
            h /= 2.0;
            if h < c.ode_dt * 1e-6 {
                return Err(Error::NoSteadyState { t, residual: f64::INFINITY, max_re_eig: f64::NAN });
            }
            continue;
        }
        x = next;
        t += h;
        steps += 1;
    }
    Err(Error::NoSteadyState {
        t,
        residual: f.drift(&x).norm_inf(),
        max_re_eig: max_growth_rate_at(&f, &x),
    })
}

/// One Euler–Maruyama step as seen by an observer: the state at the start of
/// the step and the increments that advance it.
#[derive(Debug, Clone, Copy)]
pub struct Step<'a> {
    pub k: usize,
    pub t: f64,
    /// True inside the filter window, after settling.
    pub in_window: bool,
    pub state: &'a CumulantState,
    pub dw_i: f64,
    pub dw_q: f64,
}

/// Integrates one conditional trajectory for `t_settle + t_filter` and
/// reports every step to `observe`. Returns the final state.
pub fn integrate_trajectory<F: FnMut(&Step)>(
    coeffs: &Coefficients,
    init: &CumulantState,
    c: &SimControls,
    seed: u64,
    index: usize,
    mut observe: F,
) -> Result<CumulantState> {
    let mut rng = substream(seed, Purpose::Measurement, index as u64);
    let sqrt_dt = c.dt.sqrt();
    let settle = c.settle_steps();
    let total = settle + c.filter_steps();
    let mut x = *init;
    for k in 0..total {
        let dw_i = sqrt_dt * { let z: f64 = StandardNormal.sample(&mut rng); z };
        let dw_q = sqrt_dt * { let z: f64 = StandardNormal.sample(&mut rng); z };
        let t = k as f64 * c.dt;
        observe(&Step { k, t, in_window: k >= settle, state: &x, dw_i, dw_q });
        x += coeffs.increment(&x, dw_i, dw_q, c.dt);
        if !x.is_finite() {
            return Err(Error::Diverged { index, t: t + c.dt });
        }
    }
    Ok(x)
}

/// Filter-window history of one conditional trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub index: usize,
    /// Provenance seed derived from the master seed and `index`.
    pub seed: u64,
    /// Time of the first stored step.
    pub t0: f64,
    pub dt: f64,
    /// Conditional `<s2>` at the start of each step.
    pub s2: Vec<C64>,
    pub dw_i: Vec<f64>,
    pub dw_q: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.s2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s2.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.t0 + k as f64 * self.dt).collect()
    }

    pub fn span(&self) -> f64 {
        self.len() as f64 * self.dt
    }
}

/// Runs `n_traj` independent trajectories in parallel and returns their
/// filter-window records in index order. Each record holds three numbers per
/// step, so long windows are better served by [`map_trajectories`].
pub fn run_trajectories(
    p: &ChainParams,
    c: &SimControls,
    init: &CumulantState,
) -> Result<Vec<TrajectoryRecord>> {
    map_trajectories(p, c, init, |index, coeffs| {
        let n = c.filter_steps();
        let mut rec = TrajectoryRecord {
            index,
            seed: trajectory_seed(c.seed, index as u64),
            t0: c.settle_steps() as f64 * c.dt,
            dt: c.dt,
            s2: Vec::with_capacity(n),
            dw_i: Vec::with_capacity(n),
            dw_q: Vec::with_capacity(n),
        };
        integrate_trajectory(coeffs, init, c, c.seed, index, |s| {
            if s.in_window {
                rec.s2.push(s.state.s2);
                rec.dw_i.push(s.dw_i);
                rec.dw_q.push(s.dw_q);
            }
        })?;
        Ok(rec)
    })
}

/// Runs `work(index, coeffs)` for every trajectory index on the current
/// rayon pool and collects the results in index order.
pub fn map_trajectories<T, W>(
    p: &ChainParams,
    c: &SimControls,
    init: &CumulantState,
    work: W,
) -> Result<Vec<T>>
where
    T: Send,
    W: Fn(usize, &Coefficients) -> Result<T> + Sync,
{
    p.validate()?;
    c.validate()?;
    if !init.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    let coeffs = Coefficients::new(p);
    (0..c.n_traj).into_par_iter().map(|i| work(i, &coeffs)).collect()
}
