//! Concrete pseudo-boson models: the extended harmonic oscillator, the Swanson
//! Hamiltonian, pairs seeded from a Riesz basis, and a derivative/position pair
//! that has no normalizable vacuum.

use nalgebra::{DMatrix, Schur};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{mode_ladders, CMatrix, CVector, ModeLayout, TruncatedOperator, C64, I};
use crate::frames::{self, frame_operator_on, Regularity};
use crate::matfn::{herm_exp, herm_sqrt};
use crate::pbsystem::{self, BiorthogonalSystem, PseudoBosonPair};
use crate::tolerance::Tolerances;

fn default_alpha() -> [f64; 2] {
    [1.0, 0.0]
}

fn default_modes() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// `b = a^dagger`, the ordinary boson.
    StandardBosons,
    /// `A = a - 1/beta`, `B = a^dagger + 1/beta`.
    ExtendedOscillator { beta: f64 },
    /// `A = cos(theta) a + i sin(theta) a^dagger`, `B = cos(theta) a^dagger + i sin(theta) a`.
    /// `alpha` (as `[re, im]`) only rescales the metric.
    Swanson {
        theta: f64,
        #[serde(default = "default_alpha")]
        alpha: [f64; 2],
    },
    /// `a = T c T^-1`, `b = T c^dagger T^-1` with `T` the square root of the frame
    /// operator of the basis `{T_0 e_n}`; `T_0` alternates 1 and `condition` on the
    /// diagonal, optionally conjugated by a random rotation on its leading
    /// `rotation_block` levels.
    RieszSeeded {
        condition: f64,
        #[serde(default)]
        rotation_block: usize,
        #[serde(default)]
        seed: u64,
    },
    /// `a = d/dx`, `b = x` on a uniform grid over `[-L, L]`.
    Counterexample { grid_points: usize, box_half_width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub dim: usize,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, dim: usize) -> Self {
        Self { kind, dim, modes: 1 }
    }

    pub fn with_dim(&self, dim: usize) -> Self {
        Self { dim, ..self.clone() }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::StandardBosons => "standard_bosons",
            ModelKind::ExtendedOscillator { .. } => "extended_oscillator",
            ModelKind::Swanson { .. } => "swanson",
            ModelKind::RieszSeeded { .. } => "riesz_seeded",
            ModelKind::Counterexample { .. } => "counterexample",
        }
    }

    pub fn is_physical(&self) -> bool {
        matches!(self.kind, ModelKind::ExtendedOscillator { .. } | ModelKind::Swanson { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if self.modes == 0 {
            return bad("at least one mode is required".into());
        }
        if self.dim < 2 {
            return Err(Error::InvalidDimension { dim: self.dim });
        }
        match self.kind {
            ModelKind::StandardBosons => {}
            ModelKind::ExtendedOscillator { beta } => {
                if !(beta > 0.0 && beta.is_finite()) {
                    return bad(format!("beta must be positive, got {beta}"));
                }
            }
            ModelKind::Swanson { theta, alpha } => {
                if !(theta.abs() < std::f64::consts::FRAC_PI_4) || theta == 0.0 {
                    return bad(format!("theta must lie in (-pi/4, pi/4) without 0, got {theta}"));
                }
                if alpha[0] == 0.0 && alpha[1] == 0.0 || !alpha.iter().all(|x| x.is_finite()) {
                    return bad("alpha must be a nonzero complex number".into());
                }
            }
            ModelKind::RieszSeeded { condition, rotation_block, .. } => {
                if !(condition >= 1.0 && condition.is_finite()) {
                    return bad(format!("seed condition must be at least 1, got {condition}"));
                }
                if rotation_block > self.dim {
                    return bad(format!("rotation block {rotation_block} exceeds dim {}", self.dim));
                }
            }
            ModelKind::Counterexample { grid_points, box_half_width } => {
                if self.modes != 1 {
                    return bad("the counterexample has a single mode".into());
                }
                if grid_points < 5 {
                    return bad(format!("need at least 5 grid points, got {grid_points}"));
                }
                if !(box_half_width > 0.0 && box_half_width.is_finite()) {
                    return bad(format!("box half-width must be positive, got {box_half_width}"));
                }
            }
        }
        Ok(())
    }

    /// Cutoff per mode of the instantiated operators.
    pub fn cutoff(&self) -> usize {
        match self.kind {
            ModelKind::Counterexample { grid_points, .. } => grid_points,
            _ => self.dim,
        }
    }

    pub fn layout(&self) -> Result<ModeLayout> {
        ModeLayout::uniform(self.cutoff(), self.modes)
    }
}

/// Default evaluation region: the leading half of each mode.
pub fn default_trust(dim: usize) -> usize {
    dim.div_ceil(2)
}

/// Region for reconstruction-type checks (completeness, mutual mapping,
/// intertwining, metric, quadrature): three sixteenths of each mode, so that
/// the partial sums reaching it run well past it.
pub fn core_trust(dim: usize) -> usize {
    (3 * dim).div_ceil(16).max(1)
}

/// Default ladder length: half the evaluation region.
pub fn default_n_max(trust: usize) -> usize {
    (trust / 2).max(1)
}

/// Per-mode order of the frame-operator partial sums whose rows in `trust` are
/// untouched by the truncation edge.
pub fn frame_order(dim: usize, trust: usize) -> usize {
    dim.saturating_sub(trust + 1).max(1)
}

pub fn instantiate(spec: &ModelSpec, tol: &Tolerances) -> Result<PseudoBosonPair> {
    spec.validate()?;
    let layout = spec.layout()?;
    match spec.kind {
        ModelKind::StandardBosons => {
            let c = mode_ladders(&layout)?;
            let cd = c.iter().map(|x| x.adjoint()).collect();
            PseudoBosonPair::new(c, cd)
        }
        ModelKind::ExtendedOscillator { beta } => {
            let c = mode_ladders(&layout)?;
            let shift = C64::new(1.0 / beta, 0.0);
            let a = c.iter().map(|x| x.shift(-shift)).collect();
            let b = c.iter().map(|x| x.adjoint().shift(shift)).collect();
            PseudoBosonPair::new(a, b)
        }
        ModelKind::Swanson { theta, .. } => {
            let c = mode_ladders(&layout)?;
            let (cs, sn) = (C64::new(theta.cos(), 0.0), I * theta.sin());
            let a = c.iter().map(|x| &x.scale(cs) + &x.adjoint().scale(sn)).collect();
            let b = c.iter().map(|x| &x.adjoint().scale(cs) + &x.scale(sn)).collect();
            PseudoBosonPair::new(a, b)
        }
        ModelKind::RieszSeeded { condition, rotation_block, seed } => {
            let single = seed_map(condition, spec.dim, rotation_block, seed);
            let mut t0 = CMatrix::identity(1, 1);
            for _ in 0..spec.modes {
                t0 = t0.kronecker(&single);
            }
            let basis: Vec<CVector> = (0..t0.ncols()).map(|k| t0.column(k).into_owned()).collect();
            let s = frame_operator_on(&basis, &layout)?;
            let t = herm_sqrt(&s, tol)?;
            let c = mode_ladders(&layout)?;
            let cd: Vec<TruncatedOperator> = c.iter().map(|x| x.adjoint()).collect();
            frames::debosonize(&c, &cd, &t, tol)
        }
        ModelKind::Counterexample { grid_points, box_half_width } => {
            let (d, x) = grid_operators(grid_points, box_half_width)?;
            PseudoBosonPair::single(d, x)
        }
    }
}

/// Seed map with diagonal alternating `1, condition, 1, ...`; the leading
/// `rotation_block` levels are conjugated by a seeded random orthogonal matrix.
pub fn seed_map(condition: f64, dim: usize, rotation_block: usize, seed: u64) -> CMatrix {
    let diag: Vec<f64> = (0..dim).map(|n| if n % 2 == 0 { 1.0 } else { condition }).collect();
    let mut t = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()));
    let k = rotation_block.min(dim);
    if k >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::<f64>::from_fn(k, k, |_, _| StandardNormal.sample(&mut rng));
        let qr = g.qr();
        let r = qr.r();
        let mut q = qr.q();
        for j in 0..k {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        let d = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_column_slice(&diag[..k]));
        let block = &q * d * q.transpose();
        t.view_mut((0, 0), (k, k)).copy_from(&block);
    }
    t.map(|x| C64::new(x, 0.0))
}

/// Derivative (central differences, one-sided at both ends) and position on a
/// uniform grid of `points` over `[-half_width, half_width]`.
pub fn grid_operators(points: usize, half_width: f64) -> Result<(TruncatedOperator, TruncatedOperator)> {
    if points < 3 {
        return Err(Error::InvalidDimension { dim: points });
    }
    let h = 2.0 * half_width / (points - 1) as f64;
    let mut d = CMatrix::zeros(points, points);
    for i in 1..points - 1 {
        d[(i, i + 1)] = C64::new(0.5 / h, 0.0);
        d[(i, i - 1)] = C64::new(-0.5 / h, 0.0);
    }
    d[(0, 0)] = C64::new(-1.0 / h, 0.0);
    d[(0, 1)] = C64::new(1.0 / h, 0.0);
    d[(points - 1, points - 2)] = C64::new(-1.0 / h, 0.0);
    d[(points - 1, points - 1)] = C64::new(1.0 / h, 0.0);
    let x = CMatrix::from_fn(points, points, |i, j| {
        if i == j {
            C64::new(-half_width + i as f64 * h, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok((TruncatedOperator::from_matrix(d)?, TruncatedOperator::from_matrix(x)?))
}

/// `gamma = (2 + beta^2) / (2 beta^2)`.
pub fn gamma_beta(beta: f64) -> f64 {
    (2.0 + beta * beta) / (2.0 * beta * beta)
}

/// `omega = 1 / cos(2 theta)`.
pub fn omega_theta(theta: f64) -> f64 {
    1.0 / (2.0 * theta).cos()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamiltonianCheck {
    /// `gamma_beta` or `omega_theta`.
    pub constant: f64,
    /// `|| H_direct - H_factorized ||` on the trust region.
    pub residual: f64,
    /// Largest deviation of the lowest eigenvalues of the truncated `H` from the
    /// closed-form spectrum, relative to `max(1, |E_n|)`; imaginary parts count.
    pub spectrum_defect: f64,
    pub levels_checked: usize,
}

/// Build `H` from position and momentum and from the factorized form, then
/// compare them on `trust` and compare the lowest `trust / 2` eigenvalues
/// with the closed-form spectrum (single mode only for the spectrum).
pub fn hamiltonian_factor_check(spec: &ModelSpec, pair: &PseudoBosonPair, trust: usize) -> Result<HamiltonianCheck> {
    let layout = pair.layout().clone();
    layout.check_trust(trust)?;
    let c = mode_ladders(&layout)?;
    let r2 = std::f64::consts::SQRT_2;
    let mut direct = TruncatedOperator::zeros(&layout);
    let mut factor = TruncatedOperator::zeros(&layout);
    let (constant, energy): (f64, Box<dyn Fn(usize) -> f64>) = match spec.kind {
        ModelKind::ExtendedOscillator { beta } => {
            let g = gamma_beta(beta);
            for (j, cj) in c.iter().enumerate() {
                let (x, p) = quadratures(cj);
                let kinetic = &(&p * &p) + &(&x * &x);
                let h = &kinetic.scale(C64::new(beta / 2.0, 0.0)) + &p.scale(I * r2);
                direct = &direct + &h;
                let ba = &pair.b()[j] * &pair.a()[j];
                factor = &factor + &ba.shift(C64::new(g, 0.0)).scale(C64::new(beta, 0.0));
            }
            (g, Box::new(move |n| beta * (n as f64 + g)))
        }
        ModelKind::Swanson { theta, .. } => {
            let w = omega_theta(theta);
            for (j, cj) in c.iter().enumerate() {
                let (x, p) = quadratures(cj);
                let p2 = &p * &p;
                let x2 = &x * &x;
                let h = &(&p2 + &x2).scale(C64::new(0.5, 0.0)) - &(&p2 - &x2).scale(I * (0.5 * (2.0 * theta).tan()));
                direct = &direct + &h;
                let ba = &pair.b()[j] * &pair.a()[j];
                factor = &factor + &ba.shift(C64::new(0.5, 0.0)).scale(C64::new(w, 0.0));
            }
            (w, Box::new(move |n| w * (n as f64 + 0.5)))
        }
        _ => {
            return Err(Error::InvalidModel(format!("{} has no Hamiltonian", spec.name())));
        }
    };
    let residual = (&direct - &factor).trust_block(trust).norm();
    let (spectrum_defect, levels_checked) = if layout.modes() == 1 {
        let levels = (trust / 2).max(1);
        let schur = Schur::new(direct.matrix().clone());
        let (_, tri) = schur.unpack();
        let mut values: Vec<C64> = (0..tri.nrows()).map(|k| tri[(k, k)]).collect();
        values.sort_by(|x, y| x.re.total_cmp(&y.re));
        let worst = values
            .iter()
            .take(levels)
            .enumerate()
            .map(|(n, v)| {
                let e = energy(n);
                (v - C64::new(e, 0.0)).norm() / e.abs().max(1.0)
            })
            .fold(0.0, f64::max);
        (worst, levels)
    } else {
        (0.0, 0)
    };
    Ok(HamiltonianCheck { constant, residual, spectrum_defect, levels_checked })
}

/// `x = (c + c^dagger)/sqrt 2`, `p = (c - c^dagger)/(i sqrt 2)`.
fn quadratures(c: &TruncatedOperator) -> (TruncatedOperator, TruncatedOperator) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let cd = c.adjoint();
    let x = (c + &cd).scale(C64::new(s, 0.0));
    let p = (c - &cd).scale(-I * s);
    (x, p)
}

/// Closed-form metric: `exp(2 (a + a^dagger) / beta)` for the extended
/// oscillator, `|alpha|^2 exp(i theta (a^2 - a^dagger^2))` for Swanson.
pub fn explicit_metric(spec: &ModelSpec, tol: &Tolerances) -> Result<TruncatedOperator> {
    spec.validate()?;
    let layout = spec.layout()?;
    let c = mode_ladders(&layout)?;
    let mut generator = TruncatedOperator::zeros(&layout);
    let (scale, prefactor) = match spec.kind {
        ModelKind::ExtendedOscillator { beta } => {
            for cj in &c {
                generator = &generator + &(cj + &cj.adjoint());
            }
            (2.0 / beta, 1.0)
        }
        ModelKind::Swanson { theta, alpha } => {
            for cj in &c {
                let cd = cj.adjoint();
                generator = &generator + &(&(cj * cj) - &(&cd * &cd)).scale(I);
            }
            (theta, alpha[0] * alpha[0] + alpha[1] * alpha[1])
        }
        _ => return Err(Error::InvalidModel(format!("{} has no closed-form metric", spec.name()))),
    };
    let m = herm_exp(&generator, scale, tol)?.scale(C64::new(prefactor, 0.0));
    let defect = m.hermitian_defect();
    if defect > tol.hermitian {
        return Err(Error::NotHermitian { defect, tolerance: tol.hermitian });
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricCheck {
    /// `|| M - lambda S_phi || / || M ||` on the trust region.
    pub residual: f64,
    /// `lambda = M_00 / (S_phi)_00`, the normalization freedom of the vacua.
    pub scale: f64,
}

/// Compare the closed-form metric with the partial-sum frame operator of `system`.
pub fn metric_agreement(spec: &ModelSpec, system: &BiorthogonalSystem, trust: usize, tol: &Tolerances) -> Result<MetricCheck> {
    let m = explicit_metric(spec, tol)?;
    m.layout().check_trust(trust)?;
    let s = frame_operator_on(system.phi(), system.layout())?;
    let scale = m.matrix()[(0, 0)].re / s.matrix()[(0, 0)].re;
    let mb = m.trust_block(trust);
    let sb = s.trust_block(trust);
    Ok(MetricCheck { residual: (&mb - sb * C64::new(scale, 0.0)).norm() / mb.norm(), scale })
}

/// Outcome of the derivative/position demonstration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub grid_points: usize,
    pub box_half_width: f64,
    pub spacing: f64,
    /// Max deviation of `[a, b] f` from `f` on interior rows for a Gaussian `f`.
    pub commutator_interior: f64,
    /// Same at half the spacing; the ratio to `commutator_interior` is near 4.
    pub commutator_refined: f64,
    /// `max |v_i - mean| / |mean|` of the kernel vector.
    pub kernel_flatness: f64,
    /// `sum |v_i|^2 h` with the kernel vector scaled to unit mean.
    pub norm_integral: f64,
    /// Same on `[-2L, 2L]` at the same spacing.
    pub doubled_norm_integral: f64,
    pub growth_ratio: f64,
    pub normalizable: bool,
}

pub fn counterexample_demo(spec: &ModelSpec, tol: &Tolerances) -> Result<CounterexampleReport> {
    spec.validate()?;
    let ModelKind::Counterexample { grid_points, box_half_width } = spec.kind else {
        return Err(Error::InvalidModel(format!("{} is not the counterexample", spec.name())));
    };
    let h = 2.0 * box_half_width / (grid_points - 1) as f64;
    let commutator = |points: usize| -> Result<f64> {
        let (d, x) = grid_operators(points, box_half_width)?;
        let comm = d.commutator(&x);
        let step = 2.0 * box_half_width / (points - 1) as f64;
        let f = CVector::from_fn(points, |i, _| {
            let xi = -box_half_width + i as f64 * step;
            C64::new((-xi * xi / 2.0).exp(), 0.0)
        });
        let r = comm.apply(&f) - &f;
        Ok((1..points - 1).map(|i| r[i].norm()).fold(0.0, f64::max))
    };
    let kernel_integral = |points: usize, half: f64| -> Result<(f64, f64)> {
        let (d, _) = grid_operators(points, half)?;
        let v = pbsystem::vacuum_solve(&d, tol)?;
        let mean = v.iter().sum::<C64>() / C64::new(points as f64, 0.0);
        let flat = v.iter().map(|z| (z - mean).norm()).fold(0.0, f64::max) / mean.norm();
        let scaled = v / mean;
        Ok((scaled.norm_squared() * h, flat))
    };
    let (norm_integral, kernel_flatness) = kernel_integral(grid_points, box_half_width)?;
    let (doubled_norm_integral, _) = kernel_integral(2 * grid_points - 1, 2.0 * box_half_width)?;
    let growth_ratio = doubled_norm_integral / norm_integral;
    Ok(CounterexampleReport {
        grid_points,
        box_half_width,
        spacing: h,
        commutator_interior: commutator(grid_points)?,
        commutator_refined: commutator(2 * grid_points - 1)?,
        kernel_flatness,
        norm_integral,
        doubled_norm_integral,
        growth_ratio,
        normalizable: growth_ratio < tol.rho_flat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionFlag {
    pub assumption: u8,
    pub status: Flag,
    pub residual: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessSummary {
    pub working_trust: usize,
    pub headline_trust: usize,
    pub a_residual: f64,
    pub b_residual: f64,
    pub orthonormality: f64,
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameSummary {
    pub trust: usize,
    pub lower: f64,
    pub upper: f64,
    pub condition: f64,
    pub growth: Vec<frames::GrowthSample>,
    pub classification: Regularity,
}

/// Assumption flags and headline diagnostics for one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub spec: ModelSpec,
    pub trust: usize,
    pub assumption_flags: Vec<AssumptionFlag>,
    pub hamiltonian_check: Option<HamiltonianCheck>,
    pub frame: Option<FrameSummary>,
    pub witness: Option<WitnessSummary>,
    pub counterexample: Option<CounterexampleReport>,
}

/// Run the assumption checks at `spec.dim` with a dimension sweep
/// `dim / 4, dim / 2, dim` for the regularity flag.
pub fn assess(spec: &ModelSpec, tol: &Tolerances) -> Result<ModelReport> {
    spec.validate()?;
    let dim = spec.dim;
    let trust = default_trust(dim);
    let flag = |assumption, status, residual, note: &str| AssumptionFlag { assumption, status, residual, note: note.into() };
    if let ModelKind::Counterexample { .. } = spec.kind {
        let demo = counterexample_demo(spec, tol)?;
        let note = "kernel of the derivative is the constant function, which is not normalizable";
        return Ok(ModelReport {
            spec: spec.clone(),
            trust,
            assumption_flags: vec![
                flag(1, Flag::Fail, Some(demo.growth_ratio), note),
                flag(2, Flag::NotApplicable, None, "no vacuum, nothing to pair with"),
                flag(3, Flag::NotApplicable, None, "no families"),
                flag(4, Flag::NotApplicable, None, "no families"),
            ],
            hamiltonian_check: None,
            frame: None,
            witness: None,
            counterexample: Some(demo),
        });
    }

    let pair = instantiate(spec, tol)?;
    let mut flags = Vec::new();
    let order = frame_order(dim, trust);
    let system = match pbsystem::build_system(&pair, order, tol) {
        Ok(s) => s,
        Err(e) => {
            flags.push(flag(1, Flag::Fail, None, &e.to_string()));
            return Ok(ModelReport {
                spec: spec.clone(),
                trust,
                assumption_flags: flags,
                hamiltonian_check: None,
                frame: None,
                witness: None,
                counterexample: None,
            });
        }
    };
    let commutator = pair.commutator_defect(trust);
    flags.push(flag(1, Flag::Pass, Some(commutator), "vacuum of every a_j found"));
    flags.push(flag(2, Flag::Pass, Some(commutator), "vacuum of every b_j^dagger found"));
    let core = core_trust(dim);
    let completeness = pbsystem::build_system(&pair, frame_order(dim, core), tol)
        .and_then(|s| pbsystem::basis_completeness(&s, core))
        .map(|c| c.max());
    flags.push(match completeness {
        Ok(c) if c < tol.completeness => flag(3, Flag::Pass, Some(c), "completeness on the core region"),
        Ok(c) => flag(3, Flag::Fail, Some(c), "completeness on the core region"),
        Err(e) => flag(3, Flag::Fail, None, &e.to_string()),
    });

    let dims: Vec<usize> = [dim / 4, dim / 2, dim].into_iter().filter(|&d| d >= 4).collect();
    let sweep = || -> Result<frames::FrameReport> {
        let mut sweep = Vec::new();
        for &d in &dims {
            let t = default_trust(d);
            let p = instantiate(&spec.with_dim(d), tol)?;
            sweep.push((pbsystem::build_system(&p, frame_order(d, t), tol)?, t));
        }
        frames::frame_sweep(&sweep, tol)
    };
    let frame = match (dims.len(), sweep()) {
        (3, Ok(report)) => {
            let status = match report.classification {
                Regularity::RpbConsistent => Flag::Pass,
                Regularity::PbNonregularConsistent => Flag::Fail,
                Regularity::Inconclusive => Flag::NotApplicable,
            };
            flags.push(flag(4, status, Some(report.bounds.condition), &report.classification.to_string()));
            Some(FrameSummary {
                trust: report.trust,
                lower: report.bounds.lower,
                upper: report.bounds.upper,
                condition: report.bounds.condition,
                growth: report.growth,
                classification: report.classification,
            })
        }
        (3, Err(e)) => {
            flags.push(flag(4, Flag::NotApplicable, None, &e.to_string()));
            None
        }
        _ => {
            flags.push(flag(4, Flag::NotApplicable, None, "dimension too small for a sweep"));
            None
        }
    };

    let (s_phi, _) = frames::system_frames(&system)?;
    let witness = frames::bosonize(&pair, &s_phi, &system, trust, tol).ok().map(|w| WitnessSummary {
        working_trust: w.working_trust,
        headline_trust: w.headline_trust,
        a_residual: w.a_residual,
        b_residual: w.b_residual,
        orthonormality: w.orthonormality,
        condition: w.condition,
    });
    let hamiltonian_check = if spec.is_physical() { Some(hamiltonian_factor_check(spec, &pair, trust)?) } else { None };
    Ok(ModelReport {
        spec: spec.clone(),
        trust,
        assumption_flags: flags,
        hamiltonian_check,
        frame,
        witness,
        counterexample: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_ladder, ONE};
    use std::f64::consts::PI;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn parameter_validation() {
        let bad = [
            ModelKind::ExtendedOscillator { beta: 0.0 },
            ModelKind::Swanson { theta: 0.0, alpha: [1.0, 0.0] },
            ModelKind::Swanson { theta: PI / 4.0, alpha: [1.0, 0.0] },
            ModelKind::Swanson { theta: 0.2, alpha: [0.0, 0.0] },
            ModelKind::RieszSeeded { condition: 0.5, rotation_block: 0, seed: 0 },
            ModelKind::Counterexample { grid_points: 3, box_half_width: 1.0 },
        ];
        for kind in bad {
            assert!(matches!(ModelSpec::new(kind, 16).validate(), Err(Error::InvalidModel(_))));
        }
    }

    #[test]
    fn closed_form_constants() {
        assert_eq!(gamma_beta(1.0), 1.5);
        assert!((omega_theta(PI / 6.0) - 2.0).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn shifts_cancel_in_the_commutator() {
        let spec = ModelSpec::new(ModelKind::ExtendedOscillator { beta: 1.0 }, 24);
        let pair = instantiate(&spec, &tol()).unwrap();
        let c = build_ladder(24).unwrap();
        let want = c.commutator(&c.adjoint());
        let got = pair.a()[0].commutator(&pair.b()[0]);
        assert!((got.trust_block(23) - want.trust_block(23)).norm() < 1e-13);
    }

    #[test]
    fn swanson_at_pi_over_six_is_canonical() {
        let spec = ModelSpec::new(ModelKind::Swanson { theta: PI / 6.0, alpha: [1.0, 0.0] }, 32);
        let pair = instantiate(&spec, &tol()).unwrap();
        assert!(pair.commutator_defect(31) < 1e-12);
    }

    #[test]
    fn riesz_diagonal_seed_is_debosonized_seed() {
        let spec = ModelSpec::new(ModelKind::RieszSeeded { condition: 2.0, rotation_block: 0, seed: 0 }, 16);
        let pair = instantiate(&spec, &tol()).unwrap();
        let c = build_ladder(16).unwrap();
        let t = TruncatedOperator::from_matrix(seed_map(2.0, 16, 0, 0)).unwrap();
        let direct = frames::debosonize(std::slice::from_ref(&c), &[c.adjoint()], &t, &tol()).unwrap();
        assert!((pair.a()[0].matrix() - direct.a()[0].matrix()).norm() < 1e-13);
        assert!((pair.b()[0].matrix() - direct.b()[0].matrix()).norm() < 1e-13);
    }

    #[test]
    fn rotated_seed_is_orthogonally_similar() {
        let t = seed_map(5.0, 12, 6, 42);
        let again = seed_map(5.0, 12, 6, 42);
        assert_eq!(t, again);
        let spec = crate::matfn::HermitianSpectrum::new(&t, 1e-12).unwrap();
        assert!((spec.min() - 1.0).abs() < 1e-12 && (spec.max() - 5.0).abs() < 1e-12);
        assert!(t[(0, 1)].norm() > 0.0);
        assert_eq!(t[(6, 7)].norm(), 0.0);
    }

    #[test]
    fn swanson_factorization() {
        let spec = ModelSpec::new(ModelKind::Swanson { theta: 0.3, alpha: [1.0, 0.0] }, 64);
        let pair = instantiate(&spec, &tol()).unwrap();
        let h = hamiltonian_factor_check(&spec, &pair, 32).unwrap();
        assert!(h.residual < 1e-10, "{:e}", h.residual);
        assert!(h.spectrum_defect < 1e-8, "{:e}", h.spectrum_defect);
    }

    #[test]
    fn oscillator_factorization() {
        let spec = ModelSpec::new(ModelKind::ExtendedOscillator { beta: 1.0 }, 64);
        let pair = instantiate(&spec, &tol()).unwrap();
        let h = hamiltonian_factor_check(&spec, &pair, 32).unwrap();
        assert_eq!(h.constant, 1.5);
        assert!(h.residual < 1e-10, "{:e}", h.residual);
        assert!(h.spectrum_defect < 1e-8, "{:e}", h.spectrum_defect);
    }

    #[test]
    fn hamiltonian_needs_a_physical_model() {
        let spec = ModelSpec::new(ModelKind::StandardBosons, 8);
        let pair = instantiate(&spec, &tol()).unwrap();
        assert!(hamiltonian_factor_check(&spec, &pair, 4).is_err());
    }

    #[test]
    fn large_beta_metric_tends_to_identity() {
        let spec = ModelSpec::new(ModelKind::ExtendedOscillator { beta: 1e8 }, 16);
        let m = explicit_metric(&spec, &tol()).unwrap();
        assert!(m.defect_from_scalar(ONE, 16) < 1e-6);
    }

    #[test]
    fn swanson_metric_matches_partial_sums() {
        let spec = ModelSpec::new(ModelKind::Swanson { theta: 0.25, alpha: [1.0, 0.0] }, 64);
        let pair = instantiate(&spec, &tol()).unwrap();
        let system = pbsystem::build_system(&pair, frame_order(64, 12), &tol()).unwrap();
        let check = metric_agreement(&spec, &system, 12, &tol()).unwrap();
        assert!(check.residual < 1e-5, "{:e}", check.residual);
    }

    #[test]
    fn oscillator_metric_condition_grows() {
        let mut last = 0.0;
        for dim in [16, 32, 64] {
            let spec = ModelSpec::new(ModelKind::ExtendedOscillator { beta: 2.0 }, dim);
            let m = explicit_metric(&spec, &tol()).unwrap();
            let b = frames::riesz_bounds(&m, default_trust(dim), &tol()).unwrap();
            assert!(b.condition > last);
            last = b.condition;
        }
    }

    #[test]
    fn counterexample_grid() {
        let spec = ModelSpec::new(ModelKind::Counterexample { grid_points: 201, box_half_width: 10.0 }, 201);
        let r = counterexample_demo(&spec, &tol()).unwrap();
        assert!((r.spacing - 0.1).abs() < 1e-15);
        assert!(r.kernel_flatness < 1e-8);
        assert!((r.norm_integral - 20.0).abs() / 20.0 < 0.01);
        assert!((r.growth_ratio - 2.0).abs() < 0.1);
        assert!(!r.normalizable);
        let order = r.commutator_interior / r.commutator_refined;
        assert!((order - 4.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn core_region_is_twelve_at_64() {
        assert_eq!(core_trust(64), 12);
        assert_eq!(core_trust(16), 3);
    }

    #[test]
    fn assessment_flags_swanson_as_non_regular() {
        let spec = ModelSpec::new(ModelKind::Swanson { theta: 0.3, alpha: [1.0, 0.0] }, 64);
        let report = assess(&spec, &tol()).unwrap();
        let status: Vec<Flag> = report.assumption_flags.iter().map(|f| f.status).collect();
        assert_eq!(status, vec![Flag::Pass, Flag::Pass, Flag::Pass, Flag::Fail]);
        assert_eq!(report.frame.unwrap().classification, Regularity::PbNonregularConsistent);
    }

    #[test]
    fn assessment_flags_seeded_model_as_regular() {
        let spec = ModelSpec::new(ModelKind::RieszSeeded { condition: 10.0, rotation_block: 0, seed: 0 }, 64);
        let report = assess(&spec, &tol()).unwrap();
        assert!(report.assumption_flags.iter().all(|f| f.status == Flag::Pass));
        assert!(report.witness.unwrap().a_residual < 1e-10);
    }
}

