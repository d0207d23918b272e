//! Experiment configuration files (TOML).
//!
//! Every section mirrors a type; unknown keys are rejected so that a typo in
//! a physics parameter fails loudly instead of silently taking its default.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::path::{Path, PathBuf};

use kerrchain_core::conversion::PhysicalSnailParams;
use kerrchain_core::{ChainParams, FidelityMode, SimControls, PARAM_NAMES};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Classify,
    Sweep2d,
    NoiseStudy,
    ReadoutMap,
    LinearAnalysis,
    ConvertParams,
}

/// Which input classes `classify` and sweep spot checks compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingKind {
    /// Squeezer pump phase `phi1` vs `phi1 + π`.
    #[default]
    PumpPhase,
    /// Squeezer detuning `+chi` vs `-chi`, with `chi` from `[readout]`.
    Dispersive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    Csv,
    Json,
}

/// Evenly spaced values of one `ChainParams` entry, endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: String,
    pub min: f64,
    pub max: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

/// Evenly spaced values, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_steps() -> usize {
    41
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    self.max
                } else {
                    self.min + (self.max - self.min) * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    fn validate(&self, what: &str) -> Result<(), CliError> {
        if self.steps < 2 {
            return Err(CliError::Config(format!("{what}: steps must be >= 2, got {}", self.steps)));
        }
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(CliError::Config(format!("{what}: bounds must be finite")));
        }
        Ok(())
    }
}

impl Axis {
    pub fn range(&self) -> Range {
        Range { min: self.min, max: self.max, steps: self.steps }
    }

    pub fn values(&self) -> Vec<f64> {
        self.range().values()
    }

    fn validate(&self, what: &str) -> Result<(), CliError> {
        if !PARAM_NAMES.contains(&self.param.as_str()) {
            return Err(CliError::Config(format!(
                "{what}: unknown parameter `{}` (expected one of {})",
                self.param,
                PARAM_NAMES.join(", ")
            )));
        }
        self.range().validate(what)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis1: Axis,
    pub axis2: Axis,
    /// `(axis1, axis2)` points at which full stochastic classification is
    /// also run.
    #[serde(default)]
    pub spot_checks: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub n_cl: Vec<f64>,
    /// Phase axis the study runs over.
    pub phase: Axis,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            n_cl: vec![0.0, 1.0, 4.0, 16.0],
            phase: Axis { param: "phi2".into(), min: -PI, max: PI, steps: 41 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutConfig {
    /// Dispersive shift used by `classify` with the dispersive encoding.
    pub chi: f64,
    /// Both pumps as a fraction of their zero-detuning thresholds.
    pub g_frac: f64,
    pub phi2: f64,
    pub eta_d2: f64,
    /// Defaults to `-π/4 + phi2/2`.
    pub phi_d2: Option<f64>,
    pub phi1_range: Range,
    pub chi_range: Range,
    /// `(phi1, chi)` points checked with the full stochastic chain.
    pub spot_checks: Vec<[f64; 2]>,
    pub spot_t_filter: f64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            chi: 0.2,
            g_frac: 0.9,
            phi2: FRAC_PI_2,
            eta_d2: 1.0,
            phi_d2: None,
            phi1_range: Range { min: -PI, max: PI, steps: 41 },
            chi_range: Range { min: 0.0, max: 0.5, steps: 41 },
            spot_checks: Vec::new(),
            spot_t_filter: 4000.0,
        }
    }
}

impl ReadoutConfig {
    pub fn drive_phase(&self) -> f64 {
        self.phi_d2.unwrap_or(-FRAC_PI_4 + self.phi2 / 2.0)
    }
}

/// Fixed SNAIL constants needed to map chain parameters back to a physical
/// pump and drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnailConstants {
    pub g3: f64,
    pub g4: f64,
    pub omega_s: f64,
    pub kappa_s: f64,
}

/// Exactly one of the two directions must be given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvertConfig {
    /// Physical → effective: the result is also applied onto `[chain]`.
    pub physical: Option<PhysicalSnailParams>,
    /// Effective (`[chain]`) → physical.
    pub snail: Option<SnailConstants>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub emit: Vec<Emit>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), emit: vec![Emit::Csv, Emit::Json] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Set by the subcommand when absent.
    #[serde(default)]
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub encoding: EncodingKind,
    #[serde(default)]
    pub fidelity: FidelityMode,
    #[serde(default)]
    pub chain: ChainParams,
    #[serde(default)]
    pub controls: SimControls,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub readout: ReadoutConfig,
    #[serde(default)]
    pub convert: ConvertConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario: Some(scenario),
            encoding: EncodingKind::default(),
            fidelity: FidelityMode::default(),
            chain: ChainParams::default(),
            controls: SimControls::default(),
            sweep: None,
            noise: NoiseConfig::default(),
            readout: ReadoutConfig::default(),
            convert: ConvertConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        self.scenario.ok_or_else(|| CliError::Config("no scenario given".into()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let scenario = self.scenario()?;
        self.chain.validate().map_err(|e| CliError::Config(format!("[chain] {e}")))?;
        self.controls.validate().map_err(|e| CliError::Config(format!("[controls] {e}")))?;
        if let Some(s) = &self.sweep {
            s.axis1.validate("sweep.axis1")?;
            s.axis2.validate("sweep.axis2")?;
        }
        if scenario == Scenario::Sweep2d && self.sweep.is_none() {
            return Err(CliError::Config("sweep2d needs a [sweep] section with axis1 and axis2".into()));
        }
        self.noise.phase.validate("noise.phase")?;
        if self.noise.n_cl.is_empty() || self.noise.n_cl.iter().any(|n| !(*n >= 0.0) || !n.is_finite()) {
            return Err(CliError::Config("noise.n_cl must be a non-empty list of values >= 0".into()));
        }
        let r = &self.readout;
        if !(r.g_frac > 0.0 && r.g_frac < 1.0) {
            return Err(CliError::Config(format!("readout.g_frac must lie in (0, 1), got {}", r.g_frac)));
        }
        if !(r.chi >= 0.0) || !r.chi.is_finite() {
            return Err(CliError::Config(format!("readout.chi must be >= 0, got {}", r.chi)));
        }
        if !(r.spot_t_filter > 0.0) {
            return Err(CliError::Config("readout.spot_t_filter must be > 0".into()));
        }
        r.phi1_range.validate("readout.phi1_range")?;
        r.chi_range.validate("readout.chi_range")?;
        if r.chi_range.min < 0.0 {
            return Err(CliError::Config("readout.chi_range must be >= 0".into()));
        }
        if scenario == Scenario::ConvertParams
            && self.convert.physical.is_some() == self.convert.snail.is_some()
        {
            return Err(CliError::Config(
                "convert_params needs exactly one of [convert.physical] or [convert.snail]".into(),
            ));
        }
        if self.output.emit.is_empty() {
            return Err(CliError::Config("output.emit must name at least one format".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_includes_endpoints() {
        let v = Range { min: -1.0, max: 1.0, steps: 5 }.values();
        assert_eq!(v, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let w = Range { min: -PI, max: PI, steps: 41 }.values();
        assert_eq!(w[40], PI);
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = ExperimentConfig::from_toml("scenario = \"linear_analysis\"\n[chain]\ng1 = 0.4\n").unwrap();
        assert_eq!(cfg.chain.g1, 0.4);
        assert_eq!(cfg.chain.gamma, 1.0);
        assert_eq!(cfg.controls.t_filter, 800.0);
        assert_eq!(cfg.readout.g_frac, 0.9);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("[chain]\ngg1 = 0.4\n").is_err());
        assert!(ExperimentConfig::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn sweep_axes_must_name_params() {
        let text = "scenario = \"sweep2d\"\n[sweep.axis1]\nparam = \"g9\"\nmin = 0\nmax = 1\n\
                    [sweep.axis2]\nparam = \"eta_d2\"\nmin = 0\nmax = 1\n";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        let ok = text.replace("g9", "g2");
        let cfg = ExperimentConfig::from_toml(&ok).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.sweep.unwrap().axis1.steps, 41);
    }

    #[test]
    fn rejects_bad_steps_and_g_frac() {
        let mut cfg = ExperimentConfig::new(Scenario::ReadoutMap);
        cfg.readout.g_frac = 1.0;
        assert!(cfg.validate().is_err());
        cfg.readout.g_frac = 0.9;
        cfg.readout.chi_range.steps = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sweep_scenario_requires_axes() {
        assert!(ExperimentConfig::new(Scenario::Sweep2d).validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn range_is_monotone_with_exact_ends(min in -10.0..10.0f64, span in 0.0..10.0f64, steps in 2usize..100) {
            let r = Range { min, max: min + span, steps };
            let v = r.values();
            proptest::prop_assert_eq!(v.len(), steps);
            proptest::prop_assert_eq!(v[0], min);
            proptest::prop_assert_eq!(v[steps - 1], min + span);
            proptest::prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = ExperimentConfig::new(Scenario::NoiseStudy);
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }
}
