//! Result emission: CSV tables with fixed schemas, the summary JSON with
//! fitted constants, and the run manifest with file checksums.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::estimates::EstimateReport;
use crate::error::{Error, Result};
use crate::geometry::geometry_report;
use crate::grid::GraphField;

/// 17 significant digits: round-trips any finite double.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_lf(path: &Path, lines: &[String]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    for line in lines {
        file.write_all(line.as_bytes())?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

/// Estimates table; header is byte-exact `check,param,lhs,rhs,ratio`.
pub fn write_estimates_csv(path: &Path, reports: &[&EstimateReport]) -> Result<()> {
    let mut lines = vec!["check,param,lhs,rhs,ratio".to_string()];
    for report in reports {
        report.check_finite()?;
        for row in &report.rows {
            lines.push(format!(
                "{},\"{}\",{},{},{}",
                report.check,
                row.param,
                fmt_float(row.lhs),
                fmt_float(row.rhs),
                fmt_float(row.ratio)
            ));
        }
    }
    write_lf(path, &lines)
}

/// Per-node geometry table: x coords, |Hbar|, |Fperp|, |Hbar + Fperp|,
/// det g, lambda_min(g), lambda_max(g).
pub fn write_geometry_csv(path: &Path, field: &GraphField) -> Result<()> {
    let n = field.spec().n();
    let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    header.extend(
        ["H_norm", "F_perp_norm", "residual_norm", "det_g", "lambda_min", "lambda_max"]
            .iter()
            .map(|s| s.to_string()),
    );
    let mut lines = vec![header.join(",")];
    for row in geometry_report(field) {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState {
                t: f64::NAN,
                what: "geometry report contains non-finite entries".to_string(),
            });
        }
        lines.push(row.iter().map(|&v| fmt_float(v)).collect::<Vec<_>>().join(","));
    }
    write_lf(path, &lines)
}

/// Fitted constants of the verification battery.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Summary {
    #[serde(rename = "C_K")]
    pub c_k: f64,
    #[serde(rename = "C_star_ok")]
    pub c_star_ok: bool,
    #[serde(rename = "C_cauchy")]
    pub c_cauchy: f64,
    pub rate_slope: Option<f64>,
    pub antipodal_defect: Option<f64>,
}

impl Summary {
    pub fn check_finite(&self) -> Result<()> {
        let finite = self.c_k.is_finite()
            && self.c_cauchy.is_finite()
            && self.rate_slope.map_or(true, f64::is_finite)
            && self.antipodal_defect.map_or(true, f64::is_finite);
        if finite {
            Ok(())
        } else {
            Err(Error::NonFiniteState {
                t: f64::NAN,
                what: "summary contains non-finite constants".to_string(),
            })
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.check_finite()?;
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// The full resolved config document.
    pub config: serde_json::Value,
    /// Wall-clock seconds; excluded from any determinism contract.
    pub duration_seconds: f64,
    /// SHA-256 of every emitted file, keyed by file name.
    pub checksums: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config,
            duration_seconds: 0.0,
            checksums: BTreeMap::new(),
        }
    }

    /// Checksum the emitted files and write `manifest.json` next to them.
    pub fn finalize(mut self, out_dir: &Path, files: &[PathBuf], duration: f64) -> Result<()> {
        for file in files {
            let name = file
                .file_name()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::InvalidConfig(format!("bad output path {file:?}")))?;
            self.checksums.insert(name.to_string(), sha256_file(file)?);
        }
        self.duration_seconds = duration;
        let path = out_dir.join("manifest.json");
        std::fs::write(path, serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(())
    }
}
