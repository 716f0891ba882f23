//! Recovery error measures and the per-run report.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::TwoLayerNetwork;
use crate::subspace::{subspace_distance, SymSubspace};

/// Runs with `Σ𝓔(a_i) + Σ𝓔(v_ℓ)` below this count as trials for the refit statistics.
pub const TRIAL_BOUND: f64 = 0.5;

fn min_signed_sq_dist(u: nalgebra::DVectorView<f64>, set: &DMatrix<f64>) -> f64 {
    set.column_iter().map(|w| (u - w).norm_squared().min((u + w).norm_squared())).fold(f64::INFINITY, f64::min)
}

/// Error measures of a recovered profile set against the truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMeasures {
    /// `‖P_Ŵ − P_W‖²_F / (m0 + m1)`, when `Ŵ` is supplied.
    pub proj_err: Option<f64>,
    /// `FP(T)`: share of profiles `ŵ_j` with `E(ŵ_j) > T`.
    pub fp_rate: f64,
    /// `R_a(T)`: share of `a_i` with `𝓔(a_i) < T`.
    pub recov_a: f64,
    /// `R_v(T)`: share of `v_ℓ` with `𝓔(v_ℓ) < T`.
    pub recov_v: f64,
    /// `E(ŵ_j) = min_{w ∈ {±a_i, ±v_ℓ}} ‖ŵ_j − w‖²`
    pub profile_errors: Vec<f64>,
    /// `𝓔(w) = min_j ‖w − (±ŵ_j)‖²` for `w = a_1, …, a_{m0}, v_1, …, v_{m1}`.
    pub truth_errors: Vec<f64>,
}

impl ErrorMeasures {
    /// `Σ𝓔(a_i) + Σ𝓔(v_ℓ) < 0.5`
    pub fn is_trial(&self) -> bool {
        self.truth_errors.iter().sum::<f64>() < TRIAL_BOUND
    }
}

/// Error measures at threshold `t`. `profiles` holds one unit vector per column.
pub fn error_measures(
    profiles: &DMatrix<f64>,
    net: &TwoLayerNetwork,
    t: f64,
    w_hat: Option<&SymSubspace>,
) -> Result<ErrorMeasures> {
    if !(t > 0.0) {
        return Err(Error::InvalidConfig(format!("threshold must be positive, got {t}")));
    }
    let truth = net.profiles()?;
    if profiles.nrows() != truth.nrows() {
        return Err(Error::DimensionMismatch { expected: truth.nrows(), got: profiles.nrows() });
    }
    let profile_errors: Vec<f64> = profiles.column_iter().map(|u| min_signed_sq_dist(u, &truth)).collect();
    let truth_errors: Vec<f64> = truth.column_iter().map(|w| min_signed_sq_dist(w, profiles)).collect();
    let m0 = net.m0();
    let share = |xs: &[f64], pred: &dyn Fn(f64) -> bool| {
        if xs.is_empty() {
            0.0
        } else {
            xs.iter().filter(|&&e| pred(e)).count() as f64 / xs.len() as f64
        }
    };
    let proj_err = match w_hat {
        Some(w) => {
            let exact = crate::subspace::exact_w_from_profiles(&truth)?;
            Some(subspace_distance(w, &exact)?.powi(2) / truth.ncols() as f64)
        }
        None => None,
    };
    Ok(ErrorMeasures {
        proj_err,
        fp_rate: share(&profile_errors, &|e| e > t),
        recov_a: share(&truth_errors[..m0], &|e| e < t),
        recov_v: share(&truth_errors[m0..], &|e| e < t),
        profile_errors,
        truth_errors,
    })
}

/// One pipeline run. Unavailable or undefined quantities are `None` (`null` in JSON,
/// empty in CSV).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `"<design>/<activation>/<m0>x<m1>"`
    pub architecture: String,
    pub m0: usize,
    pub m1: usize,
    pub seed: u64,
    pub threshold: f64,
    pub proj_error_normalized: Option<f64>,
    pub fp_rate: Option<f64>,
    pub recov_a: Option<f64>,
    pub recov_v: Option<f64>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub mse: Option<f64>,
    pub e_inf: Option<f64>,
    pub e_theta: Option<f64>,
    pub e_tau: Option<f64>,
    /// Whether the run satisfies the trial condition for refit statistics.
    pub trial: Option<bool>,
    pub alpha_hat: Option<f64>,
    /// `‖P_W − P_Ŵ‖_F`
    pub delta: Option<f64>,
    pub c_f: Option<f64>,
    pub big_c_f: Option<f64>,
    pub nu: Option<f64>,
    pub c_r: Option<f64>,
    pub big_c_r: Option<f64>,
    pub n_candidates: usize,
    pub n_near_rank1: usize,
    pub query_count: u64,
    pub wallclock_secs: f64,
}

/// Fixed CSV column order.
pub const CSV_COLUMNS: [&str; 27] = [
    "architecture",
    "m0",
    "m1",
    "seed",
    "threshold",
    "proj_error_normalized",
    "fp_rate",
    "recov_a",
    "recov_v",
    "l1",
    "l2",
    "mse",
    "e_inf",
    "e_theta",
    "e_tau",
    "trial",
    "alpha_hat",
    "delta",
    "c_f",
    "big_c_f",
    "nu",
    "c_r",
    "big_c_r",
    "n_candidates",
    "n_near_rank1",
    "query_count",
    "wallclock_secs",
];

impl MetricsReport {
    /// Numeric fields that are averaged in the summary row, with their values.
    pub fn numeric_fields(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("threshold", Some(self.threshold)),
            ("proj_error_normalized", self.proj_error_normalized),
            ("fp_rate", self.fp_rate),
            ("recov_a", self.recov_a),
            ("recov_v", self.recov_v),
            ("l1", self.l1),
            ("l2", self.l2),
            ("mse", self.mse),
            ("e_inf", self.e_inf),
            ("e_theta", self.e_theta),
            ("e_tau", self.e_tau),
            ("trial", self.trial.map(|t| if t { 1.0 } else { 0.0 })),
            ("alpha_hat", self.alpha_hat),
            ("delta", self.delta),
            ("c_f", self.c_f),
            ("big_c_f", self.big_c_f),
            ("nu", self.nu),
            ("c_r", self.c_r),
            ("big_c_r", self.big_c_r),
            ("n_candidates", Some(self.n_candidates as f64)),
            ("n_near_rank1", Some(self.n_near_rank1 as f64)),
            ("query_count", Some(self.query_count as f64)),
            ("wallclock_secs", Some(self.wallclock_secs)),
        ]
    }

    fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut row = vec![self.architecture.clone(), self.m0.to_string(), self.m1.to_string(), self.seed.to_string()];
        row.extend(self.numeric_fields().into_iter().map(|(_, v)| opt(v)));
        row
    }

    /// All fields identical except the wallclock time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        let mut a = self.clone();
        let mut b = other.clone();
        a.wallclock_secs = 0.0;
        b.wallclock_secs = 0.0;
        a == b
    }
}

/// Mean of each numeric column over the reports where it is defined.
pub fn mean_row(reports: &[MetricsReport]) -> Vec<(&'static str, Option<f64>)> {
    let fields: Vec<Vec<(&'static str, Option<f64>)>> = reports.iter().map(MetricsReport::numeric_fields).collect();
    let n = fields.first().map_or(0, Vec::len);
    (0..n)
        .map(|k| {
            let name = fields[0][k].0;
            let vals: Vec<f64> = fields.iter().filter_map(|f| f[k].1).collect();
            (name, (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
    Plot,
}

/// Writes `reports.csv` (one row per report plus a `mean` row), `reports.json` and
/// `plot_data.csv` (`architecture,metric,mean,count`) into `dir`, as requested.
pub fn emit_report(reports: &[MetricsReport], dir: impl AsRef<Path>, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(Error::InvalidConfig("no reports to emit".into()));
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for format in formats {
        let path = match format {
            ReportFormat::Csv => {
                let path = dir.join("reports.csv");
                let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
                w.write_record(CSV_COLUMNS).map_err(csv_err)?;
                for r in reports {
                    w.write_record(r.csv_row()).map_err(csv_err)?;
                }
                let mut mean = vec!["mean".to_string(), String::new(), String::new(), String::new()];
                mean.extend(mean_row(reports).into_iter().map(|(_, v)| v.map(|x| x.to_string()).unwrap_or_default()));
                w.write_record(&mean).map_err(csv_err)?;
                w.flush()?;
                path
            }
            ReportFormat::Json => {
                let path = dir.join("reports.json");
                fs::write(&path, serde_json::to_string_pretty(reports)?)?;
                path
            }
            ReportFormat::Plot => {
                let path = dir.join("plot_data.csv");
                let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
                w.write_record(["architecture", "metric", "mean", "count"]).map_err(csv_err)?;
                let mut archs: Vec<&str> = reports.iter().map(|r| r.architecture.as_str()).collect();
                archs.dedup();
                archs.sort_unstable();
                archs.dedup();
                for arch in archs {
                    let group: Vec<MetricsReport> =
                        reports.iter().filter(|r| r.architecture == arch).cloned().collect();
                    for (name, v) in mean_row(&group) {
                        if let Some(v) = v {
                            w.write_record([arch, name, &v.to_string(), &group.len().to_string()]).map_err(csv_err)?;
                        }
                    }
                }
                w.flush()?;
                path
            }
        };
        written.push(path);
    }
    Ok(written)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Reads a `reports.json` written by [`emit_report`].
pub fn parse_reports(json: &str) -> Result<Vec<MetricsReport>> {
    Ok(serde_json::from_str(json)?)
}

pub fn load_reports(path: impl AsRef<Path>) -> Result<Vec<MetricsReport>> {
    parse_reports(&fs::read_to_string(path)?)
}
