//! The scenario families a config can ask for.

use std::f64::consts::PI;

use kerrchain_core::conversion::{self, EffectiveAnalyzer, PhysicalSnailParams};
use kerrchain_core::linear::{self, g2_for_gain_db, S1, S1D, S2, S2D};
use kerrchain_core::measurement::{class_params, shots_for_both};
use kerrchain_core::{
    augment_classical_noise, build_linear_system, fisher_discriminant, perturbative_delta_mu, perturbative_v,
    solve_perturbative, solve_steady, steady_metrics, ChainParams, ClassStats, CumulantState, Encoding, Mode,
    ShotRecord, SimControls, SteadyMetrics,
};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EncodingKind, ExperimentConfig, Scenario};
use crate::output::{grid_csv, json_doc, shots_csv, wants, GridPoint, Outputs};
use crate::{config::Emit, CliError};

pub fn encoding(cfg: &ExperimentConfig) -> Encoding {
    match cfg.encoding {
        EncodingKind::PumpPhase => Encoding::PumpPhase,
        EncodingKind::Dispersive => Encoding::Dispersive { chi: cfg.readout.chi },
    }
}

/// Shortest distance between two angles.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Index of the largest finite value; ties keep the first.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, v) in values.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|b| *v > values[b]) {
            best = Some(k);
        }
    }
    best
}

// ---------------------------------------------------------------- classify

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub encoding: Encoding,
    pub params: ChainParams,
    pub controls: SimControls,
    pub delta_mu: [f64; 2],
    pub delta_mu_norm: f64,
    pub d_f: f64,
    pub fidelity: f64,
    pub stats: ClassStats,
}

/// Full stochastic pipeline at one operating point.
pub fn classify_at(
    p: &ChainParams,
    c: &SimControls,
    encoding: Encoding,
    mode: kerrchain_core::FidelityMode,
) -> Result<(ClassifyReport, Vec<ShotRecord>, Vec<ShotRecord>), CliError> {
    let (a, b) = shots_for_both(p, c, encoding)?;
    let stats = ClassStats::from_shots(&a, &b, mode)?;
    let report = ClassifyReport {
        encoding,
        params: *p,
        controls: *c,
        delta_mu: [stats.delta_mu[0], stats.delta_mu[1]],
        delta_mu_norm: stats.delta_mu.norm(),
        d_f: stats.d_f,
        fidelity: stats.fidelity,
        stats,
    };
    Ok((report, a, b))
}

pub fn run_classify(cfg: &ExperimentConfig) -> Result<(ClassifyReport, Outputs), CliError> {
    let (report, a, b) = classify_at(&cfg.chain, &cfg.controls, encoding(cfg), cfg.fidelity)?;
    info!("fidelity {:.4}, D_F {:.4}, |dmu| {:.4}", report.fidelity, report.d_f, report.delta_mu_norm);
    let mut out = Outputs::default();
    if wants(cfg, Emit::Csv) {
        out.add("shots.csv", shots_csv(cfg, &[&a, &b])?);
    }
    if wants(cfg, Emit::Json) {
        out.add("metrics.json", json_doc(cfg, &report)?);
    }
    Ok((report, out))
}

// ----------------------------------------------------------------- sweep2d

/// Noise-averaged steady states of both classes and their proxy metrics.
pub fn steady_pair(p: &ChainParams, c: &SimControls, encoding: Encoding) -> Result<[CumulantState; 2], CliError> {
    let x1 = solve_steady(&class_params(p, encoding, 1)?, c)?;
    let x2 = solve_steady(&class_params(p, encoding, 2)?, c)?;
    Ok([x1, x2])
}

pub fn steady_point(p: &ChainParams, c: &SimControls, encoding: Encoding, n_cl: f64) -> Result<SteadyMetrics, CliError> {
    let [x1, x2] = steady_pair(p, c, encoding)?;
    Ok(steady_metrics(&x1, &x2, n_cl)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct RowOptimum {
    pub axis1: f64,
    /// `axis2` value maximising `‖Δμ‖` in this row.
    pub axis2: f64,
    pub delta_mu_norm: f64,
    /// The maximum is not on either end of `axis2`.
    pub interior: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpotCheck {
    pub point: [f64; 2],
    pub fidelity: f64,
    pub d_f: f64,
    pub delta_mu_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub axes: [String; 2],
    pub failures: usize,
    pub grid: Vec<GridPoint>,
    pub row_optima: Vec<RowOptimum>,
    pub spot_checks: Vec<SpotCheck>,
}

fn set_axes(base: &ChainParams, names: [&str; 2], a: f64, b: f64) -> Result<ChainParams, CliError> {
    let mut p = *base;
    p.set(names[0], a)?;
    p.set(names[1], b)?;
    Ok(p)
}

/// Evaluates `f` on the row-major grid `xs × ys` in parallel. Failed points
/// become NaN and are logged.
fn eval_grid<F>(xs: &[f64], ys: &[f64], f: F) -> (Vec<GridPoint>, usize)
where
    F: Fn(f64, f64) -> Result<(f64, f64), CliError> + Sync,
{
    let cells: Vec<(f64, f64)> = xs.iter().flat_map(|&a| ys.iter().map(move |&b| (a, b))).collect();
    let grid: Vec<GridPoint> = cells
        .par_iter()
        .map(|&(a, b)| {
            let (dm, df) = f(a, b).unwrap_or_else(|e| {
                warn!("grid point ({a}, {b}) failed: {e}");
                (f64::NAN, f64::NAN)
            });
            GridPoint { axis1: a, axis2: b, delta_mu_norm: dm, fisher_norm: df }
        })
        .collect();
    let failures = grid.iter().filter(|g| g.delta_mu_norm.is_nan()).count();
    (grid, failures)
}

fn row_optima(grid: &[GridPoint], ny: usize) -> Vec<RowOptimum> {
    grid.chunks(ny)
        .map(|row| {
            let v: Vec<f64> = row.iter().map(|g| g.delta_mu_norm).collect();
            match argmax(&v) {
                Some(k) => RowOptimum {
                    axis1: row[k].axis1,
                    axis2: row[k].axis2,
                    delta_mu_norm: v[k],
                    interior: k > 0 && k + 1 < ny,
                },
                None => RowOptimum { axis1: row[0].axis1, axis2: f64::NAN, delta_mu_norm: f64::NAN, interior: false },
            }
        })
        .collect()
}

pub fn run_sweep2d(cfg: &ExperimentConfig) -> Result<(SweepReport, Outputs), CliError> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("missing [sweep]".into()))?;
    let names = [sweep.axis1.param.as_str(), sweep.axis2.param.as_str()];
    let (xs, ys) = (sweep.axis1.values(), sweep.axis2.values());
    let enc = encoding(cfg);
    let (grid, failures) = eval_grid(&xs, &ys, |a, b| {
        let p = set_axes(&cfg.chain, names, a, b)?;
        let m = steady_point(&p, &cfg.controls, enc, p.n_cl)?;
        Ok((m.delta_mu_norm, m.fisher_norm))
    });
    if failures > 0 {
        warn!("{failures} of {} grid points failed", grid.len());
    }
    let mut spot_checks = Vec::new();
    for &[a, b] in &sweep.spot_checks {
        let p = set_axes(&cfg.chain, names, a, b)?;
        let (r, _, _) = classify_at(&p, &cfg.controls, enc, cfg.fidelity)?;
        spot_checks.push(SpotCheck { point: [a, b], fidelity: r.fidelity, d_f: r.d_f, delta_mu_norm: r.delta_mu_norm });
    }
    let report = SweepReport {
        axes: [names[0].to_string(), names[1].to_string()],
        failures,
        row_optima: row_optima(&grid, ys.len()),
        grid,
        spot_checks,
    };
    let mut out = Outputs::default();
    if wants(cfg, Emit::Csv) {
        out.add("grid.csv", grid_csv(cfg, names, &report.grid)?);
    }
    if wants(cfg, Emit::Json) {
        out.add("sweep.json", json_doc(cfg, &report)?);
    }
    Ok((report, out))
}

// ------------------------------------------------------------- noise_study

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NoiseRow {
    pub n_cl: f64,
    pub phase: f64,
    pub delta_mu_norm: f64,
    pub fisher_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseArgmax {
    pub n_cl: f64,
    /// Phase maximising `D_F` at this noise level.
    pub phase: f64,
    pub fisher_norm: f64,
    /// Angular distance to the phase maximising `‖Δμ‖`.
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseReport {
    pub phase_param: String,
    /// Phase maximising `‖Δμ‖`, which does not depend on the noise.
    pub delta_mu_argmax: f64,
    pub argmax: Vec<NoiseArgmax>,
    pub rows: Vec<NoiseRow>,
}

pub fn run_noise_study(cfg: &ExperimentConfig) -> Result<(NoiseReport, Outputs), CliError> {
    let axis = &cfg.noise.phase;
    let phases = axis.values();
    let enc = encoding(cfg);
    let levels = &cfg.noise.n_cl;
    let per_phase: Vec<Vec<NoiseRow>> = phases
        .par_iter()
        .map(|&phase| {
            let eval = || -> Result<Vec<NoiseRow>, CliError> {
                let mut p = cfg.chain;
                p.set(&axis.param, phase)?;
                let [x1, x2] = steady_pair(&p, &cfg.controls, enc)?;
                levels
                    .iter()
                    .map(|&n_cl| {
                        let m = steady_metrics(&x1, &x2, n_cl)?;
                        Ok(NoiseRow { n_cl, phase, delta_mu_norm: m.delta_mu_norm, fisher_norm: m.fisher_norm })
                    })
                    .collect()
            };
            eval().unwrap_or_else(|e| {
                warn!("{} = {phase} failed: {e}", axis.param);
                levels
                    .iter()
                    .map(|&n_cl| NoiseRow { n_cl, phase, delta_mu_norm: f64::NAN, fisher_norm: f64::NAN })
                    .collect()
            })
        })
        .collect();
    // n_cl-major table
    let rows: Vec<NoiseRow> = (0..levels.len()).flat_map(|j| per_phase.iter().map(move |r| r[j])).collect();
    let dmu: Vec<f64> = per_phase.iter().map(|r| r[0].delta_mu_norm).collect();
    let dmu_arg = argmax(&dmu).map(|k| phases[k]).unwrap_or(f64::NAN);
    let argmax = levels
        .iter()
        .enumerate()
        .map(|(j, &n_cl)| {
            let df: Vec<f64> = per_phase.iter().map(|r| r[j].fisher_norm).collect();
            match argmax(&df) {
                Some(k) => NoiseArgmax { n_cl, phase: phases[k], fisher_norm: df[k], gap: angle_distance(phases[k], dmu_arg) },
                None => NoiseArgmax { n_cl, phase: f64::NAN, fisher_norm: f64::NAN, gap: f64::NAN },
            }
        })
        .collect();
    let report = NoiseReport { phase_param: axis.param.clone(), delta_mu_argmax: dmu_arg, argmax, rows };
    let mut out = Outputs::default();
    if wants(cfg, Emit::Csv) {
        let mut csv = grid_csv(cfg, ["n_cl", &axis.param], &[])?;
        // same preamble as a grid, own column names
        csv = csv.replace("axis1,axis2,delta_mu_norm,fisher_norm\n", "n_cl,phase,delta_mu_norm,fisher_norm\n");
        for r in &report.rows {
            use crate::output::fmt_f64;
            csv.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(r.n_cl),
                fmt_f64(r.phase),
                fmt_f64(r.delta_mu_norm),
                fmt_f64(r.fisher_norm)
            ));
        }
        out.add("noise.csv", csv);
    }
    if wants(cfg, Emit::Json) {
        out.add("noise.json", json_doc(cfg, &report)?);
    }
    Ok((report, out))
}

// ------------------------------------------------------------- readout_map

#[derive(Debug, Clone, Serialize)]
pub struct ReadoutOptimum {
    pub phi1: f64,
    pub chi: f64,
    pub fisher_norm: f64,
    /// `phi2 - phi1`, wrapped to `(-π, π]`.
    pub delta_phi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReadoutReport {
    pub params: ChainParams,
    /// `κ = kappa1 + gamma`.
    pub squeezer_linewidth: f64,
    pub failures: usize,
    pub optimum: Option<ReadoutOptimum>,
    pub grid: Vec<GridPoint>,
    pub spot_checks: Vec<SpotCheck>,
}

/// Chain parameters at the readout operating point, before `phi1` and `chi`.
pub fn readout_params(cfg: &ExperimentConfig) -> ChainParams {
    let r = &cfg.readout;
    let mut p = cfg.chain;
    p.delta1 = 0.0;
    p.g1 = r.g_frac * linear::threshold(&p, Mode::Squeezer);
    p.g2 = r.g_frac * linear::threshold(&p, Mode::Analyzer);
    p.phi2 = r.phi2;
    p.phi_d2 = r.drive_phase();
    p.eta_d2 = r.eta_d2;
    p
}

/// Weak-Kerr estimates of `‖Δμ‖/√𝒯` and `D_F/𝒯` for a dispersive pair.
pub fn readout_point(p: &ChainParams, chi: f64) -> Result<(f64, f64), CliError> {
    let sol = solve_perturbative(p, Encoding::Dispersive { chi })?;
    let dmu = perturbative_delta_mu(&sol, 1.0)?;
    let v = augment_classical_noise(&perturbative_v(&sol), p.n_cl);
    Ok((dmu.norm(), fisher_discriminant(&dmu, &v)?))
}

pub fn run_readout_map(cfg: &ExperimentConfig) -> Result<(ReadoutReport, Outputs), CliError> {
    let base = readout_params(cfg);
    let r = &cfg.readout;
    let (phis, chis) = (r.phi1_range.values(), r.chi_range.values());
    let (grid, failures) = eval_grid(&phis, &chis, |phi1, chi| readout_point(&ChainParams { phi1, ..base }, chi));
    if failures > 0 {
        warn!("{failures} of {} readout points failed", grid.len());
    }
    let df: Vec<f64> = grid.iter().map(|g| g.fisher_norm).collect();
    let optimum = argmax(&df).map(|k| ReadoutOptimum {
        phi1: grid[k].axis1,
        chi: grid[k].axis2,
        fisher_norm: df[k],
        delta_phi: conversion::wrap_phase(base.phi2 - grid[k].axis1),
    });
    let mut spot_checks = Vec::new();
    for &[phi1, chi] in &r.spot_checks {
        let c = SimControls { t_filter: r.spot_t_filter, ..cfg.controls };
        let (rep, _, _) = classify_at(&ChainParams { phi1, ..base }, &c, Encoding::Dispersive { chi }, cfg.fidelity)?;
        spot_checks.push(SpotCheck { point: [phi1, chi], fidelity: rep.fidelity, d_f: rep.d_f, delta_mu_norm: rep.delta_mu_norm });
    }
    let report = ReadoutReport {
        params: base,
        squeezer_linewidth: base.squeezer_linewidth(),
        failures,
        optimum,
        grid,
        spot_checks,
    };
    let mut out = Outputs::default();
    if wants(cfg, Emit::Csv) {
        out.add("readout.csv", grid_csv(cfg, ["phi1", "chi"], &report.grid)?);
    }
    if wants(cfg, Emit::Json) {
        out.add("readout.json", json_doc(cfg, &report)?);
    }
    Ok((report, out))
}

// --------------------------------------------------------- linear_analysis

#[derive(Debug, Clone, Serialize)]
pub struct GainEntry {
    pub gain_db: f64,
    pub g2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxisEntry {
    pub phi1: f64,
    pub axis: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearReport {
    pub squeezer_threshold: f64,
    pub analyzer_threshold: f64,
    pub stable: bool,
    /// Gain at the configured `g2`, absent above threshold.
    pub analyzer_gain_db: Option<f64>,
    pub gain_table: Vec<GainEntry>,
    pub squeezing_axes: Vec<AxisEntry>,
    pub squeezer_photons: Option<f64>,
    pub analyzer_photons: Option<f64>,
    /// Boxcar `(I, Q)` covariance at `controls.t_filter` and `chain.n_cl`.
    pub filtered_covariance: Option<[[f64; 2]; 2]>,
}

pub fn linear_report(p: &ChainParams, t_filter: f64) -> LinearReport {
    let sys = build_linear_system(p);
    let lyap = linear::lyapunov_covariance(&sys).ok();
    let fc = lyap.as_ref().and_then(|c| linear::filtered_covariance_of(&sys, c, t_filter, p.n_cl).ok());
    let mut phis = vec![0.0, PI];
    if !phis.contains(&p.phi1) {
        phis.push(p.phi1);
    }
    LinearReport {
        squeezer_threshold: linear::threshold(p, Mode::Squeezer),
        analyzer_threshold: linear::threshold(p, Mode::Analyzer),
        stable: sys.is_stable(),
        analyzer_gain_db: linear::analyzer_gain_db(p).ok(),
        gain_table: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
            .into_iter()
            .map(|gain_db| GainEntry { gain_db, g2: g2_for_gain_db(p, gain_db) })
            .collect(),
        squeezing_axes: phis.into_iter().map(|phi1| AxisEntry { phi1, axis: linear::squeezing_axis(phi1) }).collect(),
        squeezer_photons: lyap.map(|c| c[(S1D, S1)].re),
        analyzer_photons: lyap.map(|c| c[(S2D, S2)].re),
        filtered_covariance: fc.map(|s| [[s[(0, 0)], s[(0, 1)]], [s[(1, 0)], s[(1, 1)]]]),
    }
}

pub fn run_linear_analysis(cfg: &ExperimentConfig) -> Result<(LinearReport, Outputs), CliError> {
    let report = linear_report(&cfg.chain, cfg.controls.t_filter);
    let mut out = Outputs::default();
    out.add("linear.json", json_doc(cfg, &report)?);
    Ok((report, out))
}

// ---------------------------------------------------------- convert_params

#[derive(Debug, Clone, Serialize)]
pub struct ConvertReport {
    pub effective: Option<EffectiveAnalyzer>,
    /// `[chain]` with the effective analyzer entries applied.
    pub chain: Option<ChainParams>,
    pub physical: Option<PhysicalSnailParams>,
}

pub fn run_convert(cfg: &ExperimentConfig) -> Result<(ConvertReport, Outputs), CliError> {
    let report = match (&cfg.convert.physical, &cfg.convert.snail) {
        (Some(phys), None) => {
            let eff = conversion::to_effective(phys)?;
            ConvertReport { chain: Some(eff.apply(&cfg.chain)?), effective: Some(eff), physical: None }
        }
        (None, Some(s)) => ConvertReport {
            effective: None,
            chain: None,
            physical: Some(conversion::from_effective(&cfg.chain, s.g3, s.g4, s.omega_s, s.kappa_s)?),
        },
        _ => return Err(CliError::Config("give exactly one of [convert.physical] or [convert.snail]".into())),
    };
    let mut out = Outputs::default();
    out.add("convert.json", json_doc(cfg, &report)?);
    Ok((report, out))
}

/// Runs the configured scenario and returns the files it produced.
pub fn run(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    cfg.validate()?;
    Ok(match cfg.scenario()? {
        Scenario::Classify => run_classify(cfg)?.1,
        Scenario::Sweep2d => run_sweep2d(cfg)?.1,
        Scenario::NoiseStudy => run_noise_study(cfg)?.1,
        Scenario::ReadoutMap => run_readout_map(cfg)?.1,
        Scenario::LinearAnalysis => run_linear_analysis(cfg)?.1,
        Scenario::ConvertParams => run_convert(cfg)?.1,
    })
}
