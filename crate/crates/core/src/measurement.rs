//! Homodyne records, classical amplifier noise and boxcar filtering into
//! single-shot `(I, Q)` samples.

use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{integrate_trajectory, map_trajectories, solve_steady, Step, TrajectoryRecord};
use crate::params::{ChainParams, SimControls};
use crate::rng::{class_seed, substream, trajectory_seed, Purpose};

/// Demodulated record stored as per-step increments `dI = 𝓘 dt`, so the
/// Wiener part is kept exactly as it was drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureTrace {
    pub t0: f64,
    pub dt: f64,
    pub seed: u64,
    pub di: Vec<f64>,
    pub dq: Vec<f64>,
}

impl QuadratureTrace {
    pub fn len(&self) -> usize {
        self.di.len()
    }

    pub fn is_empty(&self) -> bool {
        self.di.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.t0 + k as f64 * self.dt).collect()
    }

    /// Instantaneous in-phase signal `𝓘(t_k)`.
    pub fn i_signal(&self) -> impl Iterator<Item = f64> + '_ {
        self.di.iter().map(move |d| d / self.dt)
    }

    pub fn q_signal(&self) -> impl Iterator<Item = f64> + '_ {
        self.dq.iter().map(move |d| d / self.dt)
    }
}

/// One filtered measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub class_label: u8,
    pub i: f64,
    pub q: f64,
    pub seed: u64,
    pub t_filter: f64,
}

/// Draws classical noise increments `√n̄ N(0, dt)` for both quadratures.
struct ClassicalNoise {
    rng: Option<ChaCha8Rng>,
    scale: f64,
}

impl ClassicalNoise {
    fn new(n_cl: f64, dt: f64, seed: u64, index: usize) -> Self {
        let rng = (n_cl > 0.0).then(|| substream(seed, Purpose::ClassicalNoise, index as u64));
        Self { rng, scale: (n_cl * dt).sqrt() }
    }

    fn next(&mut self) -> (f64, f64) {
        match &mut self.rng {
            Some(rng) => {
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                (self.scale * a, self.scale * b)
            }
            None => (0.0, 0.0),
        }
    }
}

/// Record increments for one step given the conditional analyzer mean.
#[inline]
fn record_increment(meas: f64, s2: num_complex::Complex64, dw: (f64, f64), cl: (f64, f64), dt: f64) -> (f64, f64) {
    // √(κ2/2)<s2 + s2†> = 2√(κ2/2) Re s2 ; -i<s2 - s2†> = 2 Im s2
    (
        dw.0 + meas * 2.0 * s2.re * dt + cl.0,
        dw.1 + meas * 2.0 * s2.im * dt + cl.1,
    )
}

/// Builds the demodulated record from a trajectory, reusing its Wiener
/// increments and adding fresh classical noise drawn from `noise_seed`.
pub fn synthesize_trace(traj: &TrajectoryRecord, p: &ChainParams, noise_seed: u64) -> Result<QuadratureTrace> {
    if traj.dw_i.is_empty() || traj.dw_i.len() != traj.s2.len() || traj.dw_q.len() != traj.s2.len() {
        return Err(Error::MissingIncrements);
    }
    let meas = (p.kappa2 / 2.0).sqrt();
    let mut noise = ClassicalNoise::new(p.n_cl, traj.dt, noise_seed, traj.index);
    let (di, dq) = traj
        .s2
        .iter()
        .zip(traj.dw_i.iter().zip(&traj.dw_q))
        .map(|(s2, (a, b))| record_increment(meas, *s2, (*a, *b), noise.next(), traj.dt))
        .unzip();
    Ok(QuadratureTrace { t0: traj.t0, dt: traj.dt, seed: traj.seed, di, dq })
}

/// Integrates the last `t_filter` of a trace with weight `1/√(2𝒯)`.
pub fn boxcar_filter(trace: &QuadratureTrace, t_filter: f64, class_label: u8) -> Result<ShotRecord> {
    if !(t_filter > 0.0) {
        return Err(Error::InvalidParameter(format!("filter window must be > 0, got {t_filter}")));
    }
    let n = (t_filter / trace.dt).round() as usize;
    let span = trace.len() as f64 * trace.dt;
    if n == 0 || n > trace.len() {
        return Err(Error::WindowTooLong { t_filter, span });
    }
    let start = trace.len() - n;
    let norm = (2.0 * t_filter).sqrt();
    let i = trace.di[start..].iter().sum::<f64>() / norm;
    let q = trace.dq[start..].iter().sum::<f64>() / norm;
    if !(i.is_finite() && q.is_finite()) {
        return Err(Error::NonFinite("filtered shot"));
    }
    Ok(ShotRecord { class_label, i, q, seed: trace.seed, t_filter })
}

/// How the two input classes differ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoding {
    /// Class 2 has the squeezer pump phase advanced by π.
    PumpPhase,
    /// Qubit-induced squeezer detuning `Δ1 = +χ` (class 1) or `-χ` (class 2).
    Dispersive { chi: f64 },
}

/// Chain parameters seen by class `label` (1 or 2).
pub fn class_params(p: &ChainParams, encoding: Encoding, label: u8) -> Result<ChainParams> {
    if label != 1 && label != 2 {
        return Err(Error::InvalidParameter(format!("class label must be 1 or 2, got {label}")));
    }
    let mut q = *p;
    match encoding {
        Encoding::PumpPhase => {
            if label == 2 {
                q.phi1 += PI;
            }
        }
        Encoding::Dispersive { chi } => {
            // `0.0 - chi` keeps χ = 0 classes bitwise identical (no -0.0)
            q.delta1 = if label == 1 { chi } else { 0.0 - chi };
        }
    }
    Ok(q)
}

/// Filters one trajectory on the fly, without storing its history.
struct ShotAccumulator {
    meas: f64,
    dt: f64,
    noise: ClassicalNoise,
    sum_i: f64,
    sum_q: f64,
}

impl ShotAccumulator {
    fn observe(&mut self, s: &Step) {
        if s.in_window {
            let (di, dq) = record_increment(self.meas, s.state.s2, (s.dw_i, s.dw_q), self.noise.next(), self.dt);
            self.sum_i += di;
            self.sum_q += dq;
        }
    }
}

/// Full pipeline for one class: steady state, conditional trajectories,
/// records and boxcar filtering. Returns `n_traj` shots in index order.
pub fn shots_for_class(p: &ChainParams, c: &SimControls, encoding: Encoding, label: u8) -> Result<Vec<ShotRecord>> {
    let q = class_params(p, encoding, label)?;
    let init = solve_steady(&q, c)?;
    let seed = class_seed(c.seed, label);
    let norm = (2.0 * c.t_filter).sqrt();
    map_trajectories(&q, c, &init, |index, coeffs| {
        let mut acc = ShotAccumulator {
            meas: (q.kappa2 / 2.0).sqrt(),
            dt: c.dt,
            noise: ClassicalNoise::new(q.n_cl, c.dt, seed, index),
            sum_i: 0.0,
            sum_q: 0.0,
        };
        integrate_trajectory(coeffs, &init, c, seed, index, |s| acc.observe(s))?;
        Ok(ShotRecord {
            class_label: label,
            i: acc.sum_i / norm,
            q: acc.sum_q / norm,
            seed: trajectory_seed(seed, index as u64),
            t_filter: c.t_filter,
        })
    })
}

/// Shots for both classes, class 1 first.
pub fn shots_for_both(p: &ChainParams, c: &SimControls, encoding: Encoding) -> Result<(Vec<ShotRecord>, Vec<ShotRecord>)> {
    Ok((shots_for_class(p, c, encoding, 1)?, shots_for_class(p, c, encoding, 2)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::run_trajectories;
    use num_complex::Complex64 as C64;

    fn record(s2: C64, n: usize, dt: f64, seed: u64) -> TrajectoryRecord {
        let mut rng = substream(seed, Purpose::Auxiliary, 0);
        let mut draw = || dt.sqrt() * { let z: f64 = StandardNormal.sample(&mut rng); z };
        let dw_i = (0..n).map(|_| draw()).collect();
        let dw_q = (0..n).map(|_| draw()).collect();
        TrajectoryRecord { index: 0, seed, t0: 0.0, dt, s2: vec![s2; n], dw_i, dw_q }
    }

    fn variance(v: impl Iterator<Item = f64>) -> f64 {
        let v: Vec<f64> = v.collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    }

    #[test]
    fn zero_signal_trace_is_white_noise() {
        let dt = 0.01;
        let rec = record(C64::default(), 100_000, dt, 1);
        let tr = synthesize_trace(&rec, &ChainParams::default(), 9).unwrap();
        let var = variance(tr.i_signal());
        assert!((var * dt - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn classical_noise_adds_variance() {
        let dt = 0.01;
        let rec = record(C64::default(), 100_000, dt, 2);
        let quiet = synthesize_trace(&rec, &ChainParams::default(), 3).unwrap();
        let noisy = synthesize_trace(&rec, &ChainParams { n_cl: 4.0, ..Default::default() }, 3).unwrap();
        let extra = variance(noisy.i_signal()) - variance(quiet.i_signal());
        // Var of the difference of two independent white processes: 4/dt ± 3 σ
        let se = 4.0 / dt * (2.0 / 100_000f64).sqrt();
        assert!((extra - 4.0 / dt).abs() < 4.0 * se + 0.05 / dt, "{extra}");
    }

    #[test]
    fn constant_mean_trace_averages_to_one() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rec = record(C64::new(s, 0.0), 400_000, 0.01, 4);
        let tr = synthesize_trace(&rec, &ChainParams::default(), 0).unwrap();
        let mean = tr.i_signal().sum::<f64>() / tr.len() as f64;
        // noise on the mean is 1/√(n dt) = 0.016
        assert!((mean - 1.0).abs() < 0.07, "{mean}");
    }

    #[test]
    fn missing_increments_rejected() {
        let mut rec = record(C64::default(), 10, 0.1, 0);
        rec.dw_q.clear();
        assert_eq!(synthesize_trace(&rec, &ChainParams::default(), 0), Err(Error::MissingIncrements));
    }

    #[test]
    fn boxcar_of_zero_trace() {
        let tr = QuadratureTrace { t0: 0.0, dt: 0.1, seed: 0, di: vec![0.0; 100], dq: vec![0.0; 100] };
        let s = boxcar_filter(&tr, 10.0, 1).unwrap();
        assert_eq!((s.i, s.q), (0.0, 0.0));
        assert!(matches!(boxcar_filter(&tr, 10.5, 1), Err(Error::WindowTooLong { .. })));
    }

    #[test]
    fn boxcar_noise_free_mean_scaling() {
        // Constant <I2> with κ2 = 1: 𝓘 = <I2>, so I = 𝒯<I2>/√(2𝒯) = √(𝒯/2)<I2>.
        let i2 = 0.8;
        let s2 = C64::new(i2 / 2f64.sqrt(), 0.0);
        let mut rec = record(s2, 4000, 0.05, 0);
        rec.dw_i.fill(0.0);
        rec.dw_q.fill(0.0);
        let tr = synthesize_trace(&rec, &ChainParams::default(), 0).unwrap();
        let a = boxcar_filter(&tr, 50.0, 1).unwrap().i;
        let b = boxcar_filter(&tr, 100.0, 1).unwrap().i;
        assert!((a - (25.0f64).sqrt() * i2).abs() < 1e-12);
        assert!((b / a - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn streamed_shots_match_stored_records() {
        let p = ChainParams { g1: 0.3, g2: 0.5, eta_d2: 0.5, n_cl: 2.0, ..Default::default() };
        let c = SimControls { dt: 0.01, t_settle: 0.5, t_filter: 3.0, n_traj: 3, seed: 5, ..Default::default() };
        let streamed = shots_for_class(&p, &c, Encoding::PumpPhase, 1).unwrap();
        let seed = class_seed(c.seed, 1);
        let init = solve_steady(&p, &c).unwrap();
        let recs = run_trajectories(&p, &SimControls { seed, ..c }, &init).unwrap();
        for (shot, rec) in streamed.iter().zip(&recs) {
            let tr = synthesize_trace(rec, &p, seed).unwrap();
            let s = boxcar_filter(&tr, c.t_filter, 1).unwrap();
            assert!((s.i - shot.i).abs() < 1e-12 && (s.q - shot.q).abs() < 1e-12);
            assert_eq!(s.seed, shot.seed);
        }
    }

    #[test]
    fn classical_noise_leaves_trajectories_alone() {
        let p = ChainParams { g1: 0.3, g2: 0.5, eta_d2: 0.5, ..Default::default() };
        let c = SimControls { dt: 0.01, t_settle: 0.5, t_filter: 1.0, n_traj: 2, ..Default::default() };
        let init = solve_steady(&p, &c).unwrap();
        let a = run_trajectories(&p, &c, &init).unwrap();
        let b = run_trajectories(&ChainParams { n_cl: 9.0, ..p }, &c, &init).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn class_parameters() {
        let p = ChainParams { phi1: 0.2, delta1: 0.7, ..Default::default() };
        let q = class_params(&p, Encoding::PumpPhase, 2).unwrap();
        assert!((q.phi1 - 0.2 - PI).abs() < 1e-15);
        let q = class_params(&p, Encoding::Dispersive { chi: 0.3 }, 2).unwrap();
        assert_eq!(q.delta1, -0.3);
        assert!(class_params(&p, Encoding::PumpPhase, 3).is_err());
    }
}
