//! Report records and their JSON/CSV output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pseudobosons::coherent::ConvergenceStep;
use pseudobosons::frames::{GrowthSample, Regularity};
use pseudobosons::pbsystem::NormSample;
use pseudobosons::Tolerances;
use serde::Serialize;
use serde_json::Value;

use crate::config::{Check, RunConfig};

pub const SCHEMA: &str = "pseudobosons.report/1";

#[derive(Debug, thiserror::Error)]
pub enum EmitError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::NotApplicable => "not-applicable",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: Check,
    pub dim: usize,
    /// Evaluation region of the headline residual; absent when no region applies.
    pub trust: Option<usize>,
    pub status: Status,
    pub residual: Option<f64>,
    pub threshold: Option<f64>,
    pub cause: Option<String>,
    pub metrics: BTreeMap<String, Value>,
}

impl CheckRecord {
    pub fn new(check: Check, dim: usize, trust: Option<usize>) -> Self {
        Self { check, dim, trust, status: Status::NotApplicable, residual: None, threshold: None, cause: None, metrics: BTreeMap::new() }
    }

    pub fn metric(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.metrics.insert(key.to_string(), value.into());
        self
    }

    /// Pass when every `(name, value, threshold)` part is below its threshold; the
    /// headline residual and threshold are those of `headline`.
    pub fn judge(mut self, headline: (f64, f64), parts: &[(&str, f64, f64)]) -> Self {
        self.residual = Some(headline.0);
        self.threshold = Some(headline.1);
        let failed: Vec<String> = parts
            .iter()
            .chain(std::iter::once(&("residual", headline.0, headline.1)))
            .filter(|(_, v, t)| !(v <= t))
            .map(|(n, v, t)| format!("{n} {v:.3e} exceeds {t:.3e}"))
            .collect();
        if failed.is_empty() {
            self.status = Status::Pass;
        } else {
            self.status = Status::Fail;
            self.cause = Some(failed.join("; "));
        }
        self
    }

    pub fn with_status(mut self, status: Status, cause: impl Into<String>) -> Self {
        self.status = status;
        self.cause = Some(cause.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub package: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub float: &'static str,
}

impl Default for Environment {
    fn default() -> Self {
        Self { package: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION"), core_version: pseudobosons::VERSION, float: "f64" }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub regularity: Option<Regularity>,
    pub note: Option<String>,
    pub growth: Vec<GrowthSample>,
}

/// CSV-only tables gathered during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tables {
    pub norm_profiles: Vec<(usize, Vec<NormSample>)>,
    pub quadrature: Vec<(usize, Vec<ConvergenceStep>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub environment: Environment,
    pub config: RunConfig,
    pub tolerances: Tolerances,
    pub records: Vec<CheckRecord>,
    pub classification: Option<Classification>,
    #[serde(skip)]
    pub tables: Tables,
}

impl Report {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            schema: SCHEMA,
            environment: Environment::default(),
            config: config.clone(),
            tolerances: config.tolerances,
            records: Vec::new(),
            classification: None,
            tables: Tables::default(),
        }
    }

    /// True when no record failed or errored.
    pub fn ok(&self) -> bool {
        self.records.iter().all(|r| !matches!(r.status, Status::Fail | Status::Error))
    }

    pub fn count(&self, status: Status) -> usize {
        self.records.iter().filter(|r| r.status == status).count()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EmitError + '_ {
    move |source| EmitError::Io { path: path.to_path_buf(), source }
}

fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<(), EmitError> {
    let csv_err = |source| EmitError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Serialize)]
struct NormRow {
    n: String,
    phi_norm: f64,
    psi_norm: f64,
    product: f64,
}

#[derive(Serialize)]
struct GrowthRow {
    dim: usize,
    lower: f64,
    upper: f64,
    condition: f64,
    resolved: bool,
}

#[derive(Serialize)]
struct QuadratureRow {
    dim: usize,
    radial_nodes: usize,
    angular_nodes: usize,
    identity_defect: f64,
    s_phi_defect: f64,
    s_psi_defect: f64,
}

/// Write `report.json` and, when enabled, the CSV tables into `dir`.
pub fn emit(report: &Report, dir: &Path, csv: bool) -> Result<Vec<PathBuf>, EmitError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let path = dir.join("report.json");
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    std::fs::write(&path, json).map_err(io_err(&path))?;
    written.push(path);
    if !csv {
        return Ok(written);
    }
    for (dim, profile) in &report.tables.norm_profiles {
        let path = dir.join(format!("norm_profile_dim{dim}.csv"));
        write_csv(
            &path,
            profile.iter().map(|s| NormRow {
                n: s.index.0.iter().map(usize::to_string).collect::<Vec<_>>().join(":"),
                phi_norm: s.phi_norm,
                psi_norm: s.psi_norm,
                product: s.product,
            }),
        )?;
        written.push(path);
    }
    if let Some(c) = report.classification.as_ref().filter(|c| !c.growth.is_empty()) {
        let path = dir.join("condition_growth.csv");
        write_csv(
            &path,
            c.growth.iter().map(|g| GrowthRow { dim: g.dim, lower: g.lower, upper: g.upper, condition: g.condition, resolved: g.resolved }),
        )?;
        written.push(path);
    }
    if !report.tables.quadrature.is_empty() {
        let path = dir.join("quadrature_convergence.csv");
        let rows = report.tables.quadrature.iter().flat_map(|(dim, trace)| {
            trace.iter().map(move |s| QuadratureRow {
                dim: *dim,
                radial_nodes: s.radial_nodes,
                angular_nodes: s.angular_nodes,
                identity_defect: s.defects.identity,
                s_phi_defect: s.defects.s_phi,
                s_psi_defect: s.defects.s_psi,
            })
        });
        write_csv(&path, rows)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn judge_passes_only_when_every_part_is_below_threshold() {
        let r = CheckRecord::new(Check::Eigen, 8, Some(4)).judge((1e-12, 1e-8), &[("gram", 1e-10, 1e-8)]);
        assert_eq!(r.status, Status::Pass);
        let r = CheckRecord::new(Check::Eigen, 8, Some(4)).judge((1e-12, 1e-8), &[("gram", 1e-6, 1e-8)]);
        assert_eq!(r.status, Status::Fail);
        assert!(r.cause.unwrap().starts_with("gram"));
        let r = CheckRecord::new(Check::Eigen, 8, Some(4)).judge((f64::NAN, 1e-8), &[]);
        assert_eq!(r.status, Status::Fail);
    }

    #[test]
    fn statuses_serialize_in_kebab_case() {
        for s in [Status::Pass, Status::Fail, Status::NotApplicable, Status::Error] {
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.as_str()));
        }
    }
}
