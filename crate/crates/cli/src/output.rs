//! Deterministic CSV/JSON writers.
//!
//! Each file opens with the tool version and the fully resolved config, so a
//! file can be re-run from its own header. Nothing time- or host-dependent
//! is written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use kerrchain_core::ShotRecord;
use serde::Serialize;

use crate::config::{Emit, ExperimentConfig};
use crate::CliError;

pub const TOOL: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Float format used in every CSV cell: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One cell of a 2-D grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub axis1: f64,
    pub axis2: f64,
    pub delta_mu_norm: f64,
    pub fisher_norm: f64,
}

fn header(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let json = serde_json::to_string(cfg).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(format!("# tool: {TOOL}\n# config: {json}\n"))
}

pub fn shots_csv(cfg: &ExperimentConfig, shots: &[&[ShotRecord]]) -> Result<String, CliError> {
    let mut out = header(cfg)?;
    out.push_str("class,I,Q,seed\n");
    for s in shots.iter().flat_map(|c| c.iter()) {
        writeln!(out, "{},{},{},{}", s.class_label, fmt_f64(s.i), fmt_f64(s.q), s.seed).unwrap();
    }
    Ok(out)
}

/// Row-major grid in axis order. `names` go in a comment line; the column
/// header is fixed.
pub fn grid_csv(cfg: &ExperimentConfig, names: [&str; 2], grid: &[GridPoint]) -> Result<String, CliError> {
    let mut out = header(cfg)?;
    writeln!(out, "# axes: {},{}", names[0], names[1]).unwrap();
    out.push_str("axis1,axis2,delta_mu_norm,fisher_norm\n");
    for g in grid {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(g.axis1),
            fmt_f64(g.axis2),
            fmt_f64(g.delta_mu_norm),
            fmt_f64(g.fisher_norm)
        )
        .unwrap();
    }
    Ok(out)
}

pub fn json_doc<T: Serialize>(cfg: &ExperimentConfig, result: &T) -> Result<String, CliError> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        tool: &'a str,
        config: &'a ExperimentConfig,
        result: &'a T,
    }
    let mut s = serde_json::to_string_pretty(&Doc { tool: TOOL, config: cfg, result })
        .map_err(|e| CliError::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Collects output files and writes them under one directory.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for (name, body) in &self.files {
            let path = dir.join(name);
            fs::write(&path, body)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

pub fn wants(cfg: &ExperimentConfig, e: Emit) -> bool {
    cfg.output.emit.contains(&e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Scenario;

    #[test]
    fn floats_round_trip_losslessly() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0] {
            let y: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn shots_csv_layout() {
        let cfg = ExperimentConfig::new(Scenario::Classify);
        let a = [ShotRecord { class_label: 1, i: 0.5, q: -0.25, seed: 7, t_filter: 1.0 }];
        let b = [ShotRecord { class_label: 2, i: 1.0, q: 2.0, seed: 9, t_filter: 1.0 }];
        let csv = shots_csv(&cfg, &[&a, &b]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# tool: kerrchain-cli "));
        assert!(lines[1].starts_with("# config: {"));
        assert_eq!(lines[2], "class,I,Q,seed");
        assert_eq!(lines[3], "1,5.0000000000000000e-1,-2.5000000000000000e-1,7");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn embedded_config_parses_back() {
        let cfg = ExperimentConfig::new(Scenario::LinearAnalysis);
        let csv = grid_csv(&cfg, ["g2", "eta_d2"], &[]).unwrap();
        let json = csv.lines().nth(1).unwrap().trim_start_matches("# config: ");
        let back: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(back, cfg);
    }
}
