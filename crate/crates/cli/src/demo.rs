//! Bundled configurations covering every model and check, with the outcome each
//! one is expected to produce.

use std::path::{Path, PathBuf};

use pseudobosons::frames::Regularity;
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};
use crate::report::{emit, EmitError, Report};
use crate::run::run_checks;

#[derive(Debug, Clone, Copy)]
pub struct DemoCase {
    pub name: &'static str,
    pub config: &'static str,
    /// Expected value of `Report::ok`, when the case pins it.
    pub ok: Option<bool>,
    pub classification: Option<Regularity>,
}

pub const CASES: &[DemoCase] = &[
    DemoCase {
        name: "swanson_theta0.3",
        config: "dims = [16, 32, 64]\nchecks = [\"frames\"]\nmodel.kind = \"swanson\"\nmodel.theta = 0.3\n",
        ok: None,
        classification: Some(Regularity::PbNonregularConsistent),
    },
    DemoCase {
        name: "swanson_theta0.3_witness",
        config: "dims = [64]\nchecks = [\"assumptions\", \"eigen\", \"bosonize\", \"coherent\"]\nmodel.kind = \"swanson\"\nmodel.theta = 0.3\n",
        ok: Some(false),
        classification: None,
    },
    DemoCase {
        name: "swanson_theta0.25_metric",
        config: "dims = [64]\nchecks = [\"assumptions\", \"eigen\", \"metric\"]\nmodel.kind = \"swanson\"\nmodel.theta = 0.25\n",
        ok: Some(true),
        classification: None,
    },
    DemoCase {
        name: "swanson_theta0.4_quadrature",
        config: "dims = [128]\nchecks = [\"quadrature\"]\nmodel.kind = \"swanson\"\nmodel.theta = 0.4\n",
        ok: Some(false),
        classification: None,
    },
    DemoCase {
        name: "extended_oscillator_beta1",
        config: "dims = [16, 32, 64]\nchecks = [\"frames\"]\nmodel.kind = \"extended_oscillator\"\nmodel.beta = 1.0\n",
        ok: None,
        classification: Some(Regularity::PbNonregularConsistent),
    },
    DemoCase {
        name: "extended_oscillator_beta1_dim64",
        config: "dims = [64]\nchecks = [\"assumptions\", \"eigen\", \"frames\", \"coherent\", \"hamiltonian\", \"metric\"]\n\
                 model.kind = \"extended_oscillator\"\nmodel.beta = 1.0\n",
        ok: Some(true),
        classification: None,
    },
    DemoCase {
        name: "extended_oscillator_beta2",
        config: "dims = [16, 32, 64]\nchecks = [\"frames\"]\nmodel.kind = \"extended_oscillator\"\nmodel.beta = 2.0\n",
        ok: None,
        classification: Some(Regularity::PbNonregularConsistent),
    },
    DemoCase {
        name: "riesz_seeded_condition10",
        config: "dims = [16, 32, 64]\nmodel.kind = \"riesz_seeded\"\nmodel.condition = 10.0\n",
        ok: Some(true),
        classification: Some(Regularity::RpbConsistent),
    },
    DemoCase {
        name: "standard_bosons",
        config: "dims = [64]\nchecks = [\"assumptions\", \"eigen\", \"coherent\", \"quadrature\"]\nmodel.kind = \"standard_bosons\"\n",
        ok: Some(true),
        classification: None,
    },
    DemoCase {
        name: "counterexample",
        config: "dims = [201]\nchecks = [\"assumptions\"]\nmodel.kind = \"counterexample\"\nmodel.grid_points = 201\nmodel.box_half_width = 10.0\n",
        ok: Some(false),
        classification: None,
    },
];

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error("bundled case {name}: {source}")]
    Config { name: &'static str, source: ConfigError },
    #[error(transparent)]
    Emit(#[from] EmitError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseOutcome {
    pub name: &'static str,
    pub ok: bool,
    pub expected_ok: Option<bool>,
    pub classification: Option<Regularity>,
    pub expected_classification: Option<Regularity>,
    pub as_expected: bool,
}

pub fn run_case(case: &DemoCase) -> Result<(Report, CaseOutcome), DemoError> {
    let config = RunConfig::from_toml(case.config, case.name, &[]).map_err(|source| DemoError::Config { name: case.name, source })?;
    let report = run_checks(&config);
    let classification = report.classification.as_ref().and_then(|c| c.regularity);
    let ok = report.ok();
    let as_expected = case.ok.is_none_or(|want| want == ok) && (case.classification.is_none() || classification == case.classification);
    let outcome = CaseOutcome {
        name: case.name,
        ok,
        expected_ok: case.ok,
        classification,
        expected_classification: case.classification,
        as_expected,
    };
    Ok((report, outcome))
}

/// Run every bundled case into `out/<name>/` and write `out/demo_summary.json`.
pub fn run_demo(out: &Path) -> Result<Vec<CaseOutcome>, DemoError> {
    let mut outcomes = Vec::with_capacity(CASES.len());
    for case in CASES {
        let (report, outcome) = run_case(case)?;
        emit(&report, &out.join(case.name), true)?;
        outcomes.push(outcome);
    }
    let path: PathBuf = out.join("demo_summary.json");
    let mut json = serde_json::to_string_pretty(&outcomes).map_err(EmitError::from)?;
    json.push('\n');
    std::fs::write(&path, json).map_err(|source| EmitError::Io { path, source })?;
    Ok(outcomes)
}
