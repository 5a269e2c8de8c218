//! Execute the requested checks for every dimension of a run.

use std::cell::OnceCell;
use std::f64::consts::TAU;

use pseudobosons::coherent::{coherent_build, eigen_relation_check, identity_resolution_quadrature, QuadratureSpec};
use pseudobosons::fock::ONE;
use pseudobosons::frames::{self, classify_regularity, growth_sample, intertwine_residual, mutual_mapping_check, system_frames, GrowthSample};
use pseudobosons::models::{
    core_trust, counterexample_demo, default_n_max, default_trust, frame_order, hamiltonian_factor_check, instantiate, metric_agreement,
    ModelKind, ModelSpec,
};
use pseudobosons::pbsystem::{basis_completeness, eigen_check, gram_check};
use pseudobosons::{build_system, BiorthogonalSystem, Error, PseudoBosonPair, Result, Tolerances, C64};

use crate::config::{Check, RunConfig};
use crate::report::{CheckRecord, Classification, Report, Status, Tables};

/// State shared by the checks at one dimension; systems are built on first use.
struct DimRun<'a> {
    config: &'a RunConfig,
    tol: Tolerances,
    spec: ModelSpec,
    dim: usize,
    /// Region for the algebraic checks, frame bounds and the similarity witness.
    trust: usize,
    /// Smaller region for reconstruction checks.
    core: usize,
    pair: Result<PseudoBosonPair>,
    main: OnceCell<Result<BiorthogonalSystem>>,
    reconstruction: OnceCell<Result<BiorthogonalSystem>>,
}

impl<'a> DimRun<'a> {
    fn new(config: &'a RunConfig, dim: usize) -> Self {
        let tol = config.tolerances;
        let spec = config.model.spec(dim, config.seed);
        let pair = instantiate(&spec, &tol);
        Self {
            config,
            tol,
            dim,
            trust: config.regions.trust.unwrap_or_else(|| default_trust(dim)),
            core: config.regions.core.unwrap_or_else(|| core_trust(dim)),
            spec,
            pair,
            main: OnceCell::new(),
            reconstruction: OnceCell::new(),
        }
    }

    fn pair(&self) -> Result<&PseudoBosonPair> {
        self.pair.as_ref().map_err(Clone::clone)
    }

    /// Family whose partial sums are faithful on `trust`.
    fn main(&self) -> Result<&BiorthogonalSystem> {
        let pair = self.pair()?;
        let order = frame_order(self.dim, self.trust);
        self.main.get_or_init(|| build_system(pair, order, &self.tol)).as_ref().map_err(Clone::clone)
    }

    /// Longer family whose partial sums are faithful on `core`.
    fn reconstruction(&self) -> Result<&BiorthogonalSystem> {
        let pair = self.pair()?;
        let order = frame_order(self.dim, self.core);
        self.reconstruction.get_or_init(|| build_system(pair, order, &self.tol)).as_ref().map_err(Clone::clone)
    }

    fn n_max(&self) -> usize {
        default_n_max(self.trust)
    }

    fn record(&self, check: Check, trust: Option<usize>) -> CheckRecord {
        CheckRecord::new(check, self.dim, trust)
    }
}

fn vacuum_failure(e: &Error) -> bool {
    matches!(e, Error::NoVacuum { .. } | Error::DegenerateVacuum { .. } | Error::NormalizationImpossible { .. })
}

fn assumptions(run: &DimRun) -> Result<CheckRecord> {
    let tol = &run.tol;
    let pair = run.pair()?;
    let commutator = pair.commutator_defect(run.trust);
    let rec = run.record(Check::Assumptions, Some(run.core)).metric("commutator", commutator).metric("commutator_trust", run.trust);
    let main = match run.main() {
        Ok(s) => s,
        Err(e) if vacuum_failure(&e) => return Ok(rec.with_status(Status::Fail, e.to_string())),
        Err(e) => return Err(e),
    };
    let gram = gram_check(&main.truncated(run.n_max())).max_deviation;
    let completeness = basis_completeness(run.reconstruction()?, run.core)?.max();
    Ok(rec.metric("gram", gram).metric("gram_n_max", run.n_max()).metric("completeness", completeness).judge(
        (completeness, tol.completeness),
        &[("commutator", commutator, tol.commutator), ("gram", gram, tol.biorthogonality)],
    ))
}

fn eigen(run: &DimRun) -> Result<CheckRecord> {
    let system = run.main()?.truncated(run.n_max());
    let report = eigen_check(&system, run.pair()?, run.trust)?;
    Ok(run
        .record(Check::Eigen, Some(run.trust))
        .metric("phi", report.max_phi)
        .metric("psi", report.max_psi)
        .metric("n_max", run.n_max())
        .judge((report.max(), run.tol.eigen), &[]))
}

fn frames_check(run: &DimRun) -> Result<(CheckRecord, GrowthSample)> {
    let tol = &run.tol;
    let pair = run.pair()?;
    let (s_phi, _) = system_frames(run.main()?)?;
    let sample = growth_sample(&s_phi, run.trust, tol)?;

    let recon = run.reconstruction()?;
    let core = run.core;
    let (c_phi, c_psi) = system_frames(recon)?;
    let mapped = (3 * core / 4).min(core - 1);
    let mutual = mutual_mapping_check(&c_phi, &c_psi, recon, mapped, core)?;
    let mut intertwining: f64 = 0.0;
    for mode in 0..pair.modes() {
        let n = pair.number_op(mode);
        let nd = n.adjoint();
        intertwining = intertwining.max(intertwine_residual(&c_psi, &n, &nd, core)).max(intertwine_residual(&c_phi, &nd, &n, core));
    }
    let product = (&c_phi * &c_psi).defect_from_scalar(ONE, core);
    let change = frames::partial_sum_change(recon, core)?;
    let record = run
        .record(Check::Frames, Some(core))
        .metric("bounds_trust", run.trust)
        .metric("lower", sample.lower)
        .metric("upper", sample.upper)
        .metric("condition", sample.condition)
        .metric("resolved", sample.resolved)
        .metric("mutual_mapping", mutual.max())
        .metric("mutual_mapping_n_max", mapped)
        .metric("intertwining", intertwining)
        .metric("product_defect", product)
        .metric("partial_sum_change", change)
        .judge((intertwining, tol.completeness), &[("mutual mapping", mutual.max(), tol.completeness)]);
    Ok((record, sample))
}

fn bosonize(run: &DimRun) -> Result<CheckRecord> {
    let tol = &run.tol;
    let main = run.main()?;
    let (s_phi, _) = system_frames(main)?;
    let w = frames::bosonize(run.pair()?, &s_phi, main, run.trust, tol)?;
    Ok(run
        .record(Check::Bosonize, Some(w.headline_trust))
        .metric("working_trust", w.working_trust)
        .metric("a_residual", w.a_residual)
        .metric("b_residual", w.b_residual)
        .metric("a_residual_full", w.a_residual_full)
        .metric("b_residual_full", w.b_residual_full)
        .metric("orthonormality", w.orthonormality)
        .metric("symmetrization_defect", w.symmetrization_defect)
        .metric("condition", w.condition)
        .judge((w.a_residual.max(w.b_residual), tol.completeness), &[("orthonormality", w.orthonormality, tol.biorthogonality)]))
}

fn coherent(run: &DimRun) -> Result<CheckRecord> {
    let pair = run.pair()?;
    let main = run.main()?;
    let probes = &run.config.coherent;
    let (mut worst, mut evaluated, mut outside, mut tail): (f64, usize, usize, f64) = (0.0, 0, 0, 0.0);
    for &r in &probes.radii {
        for k in 0..probes.angles {
            let z = vec![C64::from_polar(r, TAU * k as f64 / probes.angles as f64); pair.modes()];
            match coherent_build(main, &z, &run.tol) {
                Ok(state) => {
                    worst = worst.max(eigen_relation_check(&state, pair).max());
                    tail = tail.max(state.tail_bound);
                    evaluated += 1;
                }
                Err(Error::DomainExceeded { .. }) => outside += 1,
                Err(e) => return Err(e),
            }
        }
    }
    let rec = run
        .record(Check::Coherent, None)
        .metric("probes", evaluated)
        .metric("outside_domain", outside)
        .metric("max_tail_bound", tail)
        .metric("series_cutoff", main.n_max());
    if evaluated == 0 {
        return Ok(rec.with_status(Status::NotApplicable, "every probe lies outside the faithful domain"));
    }
    Ok(rec.judge((worst, run.tol.eigen), &[]))
}

fn quadrature(run: &DimRun, tables: &mut Tables) -> Result<CheckRecord> {
    let rec = run.record(Check::Quadrature, Some(run.core));
    if run.spec.modes > 2 {
        return Ok(rec.with_status(Status::NotApplicable, "quadrature supports at most two modes"));
    }
    let q = &run.config.quadrature;
    let spec = QuadratureSpec { r_max: q.r_max, radial_nodes: q.radial_nodes, angular_nodes: q.angular_nodes, trust: run.core };
    let report = identity_resolution_quadrature(run.reconstruction()?, &spec, &run.tol)?;
    tables.quadrature.push((run.dim, report.trace.clone()));
    let mut rec = rec
        .metric("s_phi_defect", report.defects.s_phi)
        .metric("s_psi_defect", report.defects.s_psi)
        .metric("change", report.change)
        .metric("growth", report.growth)
        .metric("faithful_radius", report.faithful_radius)
        .judge((report.defects.identity, run.tol.resolution), &[("node-doubling change", report.change, run.tol.quadrature)]);
    if let Err(e) = report.verdict(&run.tol) {
        rec.status = Status::Fail;
        rec.cause = Some(e.to_string());
    }
    Ok(rec)
}

fn hamiltonian(run: &DimRun) -> Result<CheckRecord> {
    let rec = run.record(Check::Hamiltonian, Some(run.trust));
    if !run.spec.is_physical() {
        return Ok(rec.with_status(Status::NotApplicable, "no Hamiltonian is attached to this model"));
    }
    let h = hamiltonian_factor_check(&run.spec, run.pair()?, run.trust)?;
    Ok(rec
        .metric("constant", h.constant)
        .metric("spectrum_defect", h.spectrum_defect)
        .metric("levels_checked", h.levels_checked)
        .judge((h.residual, run.tol.commutator), &[("spectrum", h.spectrum_defect, run.tol.eigen)]))
}

fn metric(run: &DimRun) -> Result<CheckRecord> {
    let rec = run.record(Check::Metric, Some(run.core));
    if !run.spec.is_physical() {
        return Ok(rec.with_status(Status::NotApplicable, "no explicit metric is known for this model"));
    }
    let m = metric_agreement(&run.spec, run.reconstruction()?, run.core, &run.tol)?;
    Ok(rec.metric("scale", m.scale).judge((m.residual, run.tol.metric), &[]))
}

fn counterexample(config: &RunConfig, spec: &ModelSpec, dim: usize) -> Vec<CheckRecord> {
    let tol = &config.tolerances;
    config
        .checks
        .iter()
        .map(|&check| {
            let rec = CheckRecord::new(check, dim, None);
            if check != Check::Assumptions {
                return rec.with_status(Status::NotApplicable, "the model has no biorthogonal families");
            }
            match counterexample_demo(spec, tol) {
                Ok(d) => {
                    let rec = rec
                        .metric("spacing", d.spacing)
                        .metric("commutator_interior", d.commutator_interior)
                        .metric("commutator_refined", d.commutator_refined)
                        .metric("kernel_flatness", d.kernel_flatness)
                        .metric("norm_integral", d.norm_integral)
                        .metric("doubled_norm_integral", d.doubled_norm_integral)
                        .judge((d.growth_ratio, tol.rho_flat), &[]);
                    if d.normalizable {
                        rec
                    } else {
                        rec.with_status(
                            Status::Fail,
                            format!(
                                "no normalizable vacuum: the kernel of a is constant and its squared norm grows by {:.4} when the box doubles",
                                d.growth_ratio
                            ),
                        )
                    }
                }
                Err(e) => rec.with_status(Status::Error, e.to_string()),
            }
        })
        .collect()
}

/// Run every requested check at every dimension, in ascending order.
pub fn run_checks(config: &RunConfig) -> Report {
    let mut report = Report::new(config);
    let mut growth = Vec::new();
    let mut growth_gap = None;
    for &dim in &config.dims {
        let spec = config.model.spec(dim, config.seed);
        if let ModelKind::Counterexample { .. } = spec.kind {
            report.records.extend(counterexample(config, &spec, dim));
            continue;
        }
        let run = DimRun::new(config, dim);
        for &check in &config.checks {
            let outcome = match check {
                Check::Assumptions => assumptions(&run),
                Check::Eigen => eigen(&run),
                Check::Frames => match frames_check(&run) {
                    Ok((rec, sample)) => {
                        growth.push(sample);
                        Ok(rec)
                    }
                    Err(e) => {
                        growth_gap.get_or_insert(format!("no frame bounds at dim {dim}: {e}"));
                        Err(e)
                    }
                },
                Check::Bosonize => bosonize(&run),
                Check::Coherent => coherent(&run),
                Check::Quadrature => quadrature(&run, &mut report.tables),
                Check::Hamiltonian => hamiltonian(&run),
                Check::Metric => metric(&run),
            };
            let trust = match check {
                Check::Eigen | Check::Hamiltonian | Check::Bosonize => Some(run.trust),
                Check::Coherent => None,
                _ => Some(run.core),
            };
            report.records.push(outcome.unwrap_or_else(|e| CheckRecord::new(check, dim, trust).with_status(Status::Error, e.to_string())));
        }
        if let Some(Ok(system)) = run.main.get() {
            report.tables.norm_profiles.push((dim, system.norm_profile().to_vec()));
        }
    }
    if config.checks.contains(&Check::Frames) && !growth.is_empty() {
        let pairs: Vec<(usize, f64)> = growth.iter().map(|g| (g.dim, g.condition)).collect();
        let (regularity, note) = match (growth_gap, classify_regularity(&pairs, &config.tolerances)) {
            (Some(gap), _) => (None, Some(gap)),
            (None, Ok(r)) => (Some(r), None),
            (None, Err(e)) => (None, Some(e.to_string())),
        };
        report.classification = Some(Classification { regularity, note, growth });
    }
    report
}
