//! CSV and manifest emission. The header strings here are frozen contracts;
//! downstream scripts key on them byte for byte.

use semcom_core::simkit::{
    ErrorCapacityRow, LinkValidateRow, PerBitPowerRow, PerceptionCdfRow, PowerVsPbarRow,
};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

pub const POWER_VS_PBAR_HEADER: &str = "pbar,method,mean_total_power_w,stderr_w,n_feasible";
pub const PER_BIT_POWER_HEADER: &str = "pbar,method,stream,mean_power_per_bit_w";
pub const ERROR_CAPACITY_HEADER: &str = "pbar,method,stream,mean_error,mean_capacity_bits";
pub const PERCEPTION_CDF_HEADER: &str = "budget_w,method,quantile,perception";
pub const LINK_VALIDATE_HEADER: &str = "psi,check,empirical,analytic,stderr,z_score,pass";

/// Formats a float with 9 significant digits in scientific notation; exact
/// zero stays `0` and non-finite values spell themselves out.
pub fn fmt9(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.8e}")
    }
}

pub fn power_vs_pbar_csv(rows: &[PowerVsPbarRow]) -> String {
    let mut out = String::from(POWER_VS_PBAR_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt9(r.pbar),
            r.method.name(),
            fmt9(r.mean_total_power_w),
            fmt9(r.stderr_w),
            r.n_feasible
        ));
    }
    out
}

pub fn per_bit_power_csv(rows: &[PerBitPowerRow]) -> String {
    let mut out = String::from(PER_BIT_POWER_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt9(r.pbar),
            r.method.name(),
            r.stream,
            fmt9(r.mean_power_per_bit_w)
        ));
    }
    out
}

pub fn error_capacity_csv(rows: &[ErrorCapacityRow]) -> String {
    let mut out = String::from(ERROR_CAPACITY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt9(r.pbar),
            r.method.name(),
            r.stream,
            fmt9(r.mean_error),
            fmt9(r.mean_capacity_bits)
        ));
    }
    out
}

pub fn perception_cdf_csv(rows: &[PerceptionCdfRow]) -> String {
    let mut out = String::from(PERCEPTION_CDF_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt9(r.budget_w),
            r.method.name(),
            fmt9(r.quantile),
            fmt9(r.perception)
        ));
    }
    out
}

pub fn link_validate_csv(rows: &[LinkValidateRow]) -> String {
    let mut out = String::from(LINK_VALIDATE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt9(r.psi),
            r.check,
            fmt9(r.empirical),
            fmt9(r.analytic),
            fmt9(r.stderr),
            fmt9(r.z_score),
            r.pass
        ));
    }
    out
}

/// Provenance record written next to every experiment's CSV output.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool_version: &'static str,
    pub config_sha256: String,
    pub experiment: String,
    pub seed: u64,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(config_text: &str, experiment: &str, seed: u64, files: Vec<String>) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(config_text.as_bytes());
        Self {
            tool_version: env!("CARGO_PKG_VERSION"),
            config_sha256: format!("{:x}", hasher.finalize()),
            experiment: experiment.to_string(),
            seed,
            files,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }
}

pub fn write_file(path: &Path, content: &str) -> Result<(), String> {
    std::fs::write(path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt9_examples() {
        assert_eq!(fmt9(0.0), "0");
        assert_eq!(fmt9(0.5), "5.00000000e-1");
        assert_eq!(fmt9(1.0), "1.00000000e0");
        assert_eq!(fmt9(-3.25e-14), "-3.25000000e-14");
        assert_eq!(fmt9(f64::NAN), "nan");
        assert_eq!(fmt9(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn manifest_hash_is_stable() {
        let a = Manifest::new("{}", "x", 7, vec!["a.csv".into()]);
        let b = Manifest::new("{}", "x", 7, vec!["a.csv".into()]);
        assert_eq!(a.to_json(), b.to_json());
        let c = Manifest::new("{} ", "x", 7, vec!["a.csv".into()]);
        assert_ne!(a.config_sha256, c.config_sha256);
    }
}
