//! Frame operators of the biorthogonal families, their bounds across truncations,
//! and the similarity between pseudo-bosons and ordinary bosons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{mode_ladders, submatrix, CMatrix, CVector, ModeLayout, TruncatedOperator, C64};
use crate::matfn::HermitianSpectrum;
use crate::pbsystem::{BiorthogonalSystem, PseudoBosonPair};
use crate::tolerance::Tolerances;

/// `sum_n |v_n><v_n|` for a single-mode family.
pub fn frame_operator(family: &[CVector]) -> Result<TruncatedOperator> {
    let dim = family.first().map(|v| v.len()).ok_or_else(|| Error::Shape("empty family".into()))?;
    frame_operator_on(family, &ModeLayout::single(dim)?)
}

/// `sum_n |v_n><v_n|` on an explicit layout.
pub fn frame_operator_on(family: &[CVector], layout: &ModeLayout) -> Result<TruncatedOperator> {
    let dim = layout.total();
    if let Some(v) = family.iter().find(|v| v.len() != dim) {
        return Err(Error::Shape(format!("vector of length {} in a family of dimension {dim}", v.len())));
    }
    if family.is_empty() {
        return Err(Error::Shape("empty family".into()));
    }
    let cols = CMatrix::from_columns(family);
    TruncatedOperator::new(&cols * cols.adjoint(), layout.clone(), layout.min_cutoff())
}

/// `(S_phi, S_psi)` as partial sums over every vector of `system`.
pub fn system_frames(system: &BiorthogonalSystem) -> Result<(TruncatedOperator, TruncatedOperator)> {
    Ok((frame_operator_on(system.phi(), system.layout())?, frame_operator_on(system.psi(), system.layout())?))
}

/// Relative change of the trust-restricted frame operators when the partial sum
/// is cut at half the per-mode order.
pub fn partial_sum_change(system: &BiorthogonalSystem, trust: usize) -> Result<f64> {
    let half = system.truncated(system.n_max() / 2);
    let (full_phi, full_psi) = system_frames(system)?;
    let (half_phi, half_psi) = system_frames(&half)?;
    let rel = |full: &TruncatedOperator, half: &TruncatedOperator| {
        let f = full.trust_block(trust);
        (&f - half.trust_block(trust)).norm() / f.norm()
    };
    Ok(rel(&full_phi, &half_phi).max(rel(&full_psi, &half_psi)))
}

/// Extremal eigenvalues of a frame operator on the trust region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszBounds {
    pub lower: f64,
    pub upper: f64,
    pub condition: f64,
}

pub fn riesz_bounds(s: &TruncatedOperator, trust: usize, tol: &Tolerances) -> Result<RieszBounds> {
    s.layout().check_trust(trust)?;
    let block = s.trust_block(trust);
    let spec = HermitianSpectrum::new(&block, tol.hermitian)?;
    let (lower, upper) = (spec.min(), spec.max());
    let floor = tol.positivity(block.nrows(), upper.abs());
    if lower <= floor {
        return Err(Error::NotPositive { eigenvalue: lower, threshold: floor });
    }
    Ok(RieszBounds { lower, upper, condition: upper / lower })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regularity {
    #[serde(rename = "RPB-consistent")]
    RpbConsistent,
    #[serde(rename = "PB-nonregular-consistent")]
    PbNonregularConsistent,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl std::fmt::Display for Regularity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::RpbConsistent => "RPB-consistent",
            Self::PbNonregularConsistent => "PB-nonregular-consistent",
            Self::Inconclusive => "inconclusive",
        })
    }
}

/// Classify a sweep of `(dim, condition)` samples.
///
/// A plateau (last/first below `rho_flat`) is consistent with bounded frame
/// operators with bounded inverses; strictly increasing condition numbers that
/// grow beyond `rho_grow` are consistent with unbounded ones.
pub fn classify_regularity(growth: &[(usize, f64)], tol: &Tolerances) -> Result<Regularity> {
    if growth.len() < 3 {
        return Err(Error::InsufficientData(growth.len()));
    }
    let dims: Vec<usize> = growth.iter().map(|g| g.0).collect();
    let geometric = dims.windows(2).all(|w| w[0] < w[1]) && dims.windows(3).all(|w| w[0] * w[2] == w[1] * w[1]);
    if !geometric {
        return Err(Error::NonGeometricSweep(dims));
    }
    let first = growth[0].1;
    let last = growth[growth.len() - 1].1;
    let ratio = last / first;
    if ratio < tol.rho_flat {
        return Ok(Regularity::RpbConsistent);
    }
    let increasing = growth.windows(2).all(|w| w[1].1 > w[0].1);
    if increasing && ratio > tol.rho_grow {
        return Ok(Regularity::PbNonregularConsistent);
    }
    Ok(Regularity::Inconclusive)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthSample {
    pub dim: usize,
    pub lower: f64,
    pub upper: f64,
    pub condition: f64,
    /// False when the smallest eigenvalue sits below the positivity floor; `lower`
    /// is then the floor and `condition` only a lower bound.
    pub resolved: bool,
}

/// Bounds on the trust region, with the positivity floor standing in for an
/// unresolvably small lower bound.
pub fn growth_sample(s: &TruncatedOperator, trust: usize, tol: &Tolerances) -> Result<GrowthSample> {
    let dim = s.layout().min_cutoff();
    match riesz_bounds(s, trust, tol) {
        Ok(b) => Ok(GrowthSample { dim, lower: b.lower, upper: b.upper, condition: b.condition, resolved: true }),
        Err(Error::NotPositive { threshold, .. }) if threshold > 0.0 => {
            let spec = HermitianSpectrum::new(&s.trust_block(trust), tol.hermitian)?;
            let upper = spec.max();
            Ok(GrowthSample { dim, lower: threshold, upper, condition: upper / threshold, resolved: false })
        }
        Err(e) => Err(e),
    }
}

/// Frame operators at the largest dimension of a sweep, with the sweep itself.
#[derive(Debug, Clone)]
pub struct FrameReport {
    pub s_phi: TruncatedOperator,
    pub s_psi: TruncatedOperator,
    pub trust: usize,
    pub bounds: GrowthSample,
    /// `|| S_phi S_psi - 1 ||` on the trust region.
    pub product_defect: f64,
    pub growth: Vec<GrowthSample>,
    pub classification: Regularity,
}

/// Build a frame report from systems at increasing dimensions.
///
/// `systems` yields, per dimension, the system whose partial sums define the
/// frame operators and the trust region on which to bound them.
pub fn frame_sweep(systems: &[(BiorthogonalSystem, usize)], tol: &Tolerances) -> Result<FrameReport> {
    let mut growth = Vec::with_capacity(systems.len());
    let mut last = None;
    for (system, trust) in systems {
        let (s_phi, s_psi) = system_frames(system)?;
        let bounds = growth_sample(&s_phi, *trust, tol)?;
        growth.push(bounds);
        last = Some((s_phi, s_psi, *trust, bounds));
    }
    let (s_phi, s_psi, trust, bounds) = last.ok_or(Error::InsufficientData(0))?;
    let pairs: Vec<(usize, f64)> = growth.iter().map(|g| (g.dim, g.condition)).collect();
    let classification = classify_regularity(&pairs, tol)?;
    let product = &s_phi * &s_psi;
    let product_defect = product.defect_from_scalar(C64::new(1.0, 0.0), trust);
    Ok(FrameReport { s_phi, s_psi, trust, bounds, product_defect, growth, classification })
}

/// Relative residuals of `S_phi Psi_n = phi_n` and `S_psi phi_n = Psi_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MutualMapping {
    pub phi: f64,
    pub psi: f64,
}

impl MutualMapping {
    pub fn max(&self) -> f64 {
        self.phi.max(self.psi)
    }
}

/// Residuals over the indices up to `n_max` per mode, measured on the rows of `trust`.
pub fn mutual_mapping_check(
    s_phi: &TruncatedOperator,
    s_psi: &TruncatedOperator,
    system: &BiorthogonalSystem,
    n_max: usize,
    trust: usize,
) -> Result<MutualMapping> {
    system.layout().check_trust(trust)?;
    if n_max >= trust {
        return Err(Error::InvalidTrust { trust, dim: n_max });
    }
    let rows = system.layout().trust_indices(trust);
    let restricted = |v: &CVector| -> f64 { rows.iter().map(|&r| v[r].norm_sqr()).sum::<f64>().sqrt() };
    let mut out = MutualMapping { phi: 0.0, psi: 0.0 };
    for (k, index) in system.indices().iter().enumerate() {
        if index.max_component() > n_max {
            continue;
        }
        let (p, q) = (&system.phi()[k], &system.psi()[k]);
        out.phi = out.phi.max(restricted(&(s_phi.apply(q) - p)) / p.norm());
        out.psi = out.psi.max(restricted(&(s_psi.apply(p) - q)) / q.norm());
    }
    Ok(out)
}

/// `|| S X - Y S ||` on the trust region.
///
/// With `(S_psi, N, N^dagger)` this is the intertwining of the number operator
/// with its adjoint; `(S_phi, N^dagger, N)` gives the companion relation.
pub fn intertwine_residual(s: &TruncatedOperator, x: &TruncatedOperator, y: &TruncatedOperator, trust: usize) -> f64 {
    let lhs = s * x;
    let rhs = y * s;
    (&lhs - &rhs).trust_block(trust).norm()
}

/// Positive `T` with `a = T c T^-1` and `b = T c^dagger T^-1` on a working region.
#[derive(Debug, Clone)]
pub struct SimilarityWitness {
    pub t: TruncatedOperator,
    pub t_inv: TruncatedOperator,
    pub c: Vec<TruncatedOperator>,
    pub c_dag: Vec<TruncatedOperator>,
    /// Working region on which `T` is built.
    pub working_trust: usize,
    /// Region of the headline residuals, half the working region.
    pub headline_trust: usize,
    pub a_residual: f64,
    pub b_residual: f64,
    pub a_residual_full: f64,
    pub b_residual_full: f64,
    /// Deviation of `<T^-1 phi_n, T^-1 phi_m>` from the identity on the headline indices.
    pub orthonormality: f64,
    /// Largest `a` or `b` residual entry in each row level of the working region.
    pub edge_profile: Vec<f64>,
    /// Relative anti-Hermitian part removed from `S_phi` before the square root.
    pub symmetrization_defect: f64,
    pub condition: f64,
}

/// Recover `T = S_phi^{1/2}` on the working region `trust` and measure how well it
/// conjugates the standard ladders into the pair.
pub fn bosonize(
    pair: &PseudoBosonPair,
    s_phi: &TruncatedOperator,
    system: &BiorthogonalSystem,
    trust: usize,
    tol: &Tolerances,
) -> Result<SimilarityWitness> {
    let layout = pair.layout();
    layout.check_trust(trust)?;
    if trust < 2 {
        return Err(Error::InvalidTrust { trust, dim: layout.min_cutoff() });
    }
    let idx = layout.trust_indices(trust);
    let block = s_phi.trust_block(trust);
    let symmetrization_defect = crate::fock::hermitian_defect(&block);
    let spec = HermitianSpectrum::new(&block, f64::INFINITY)?;
    let floor = tol.positivity(block.nrows(), spec.max().abs());
    if spec.min() <= floor {
        return Err(Error::NotPositive { eigenvalue: spec.min(), threshold: floor });
    }
    let work = ModeLayout::uniform(trust, layout.modes())?;
    let t = TruncatedOperator::new(spec.map(f64::sqrt), work.clone(), trust)?;
    let t_inv = TruncatedOperator::new(spec.map(|x| 1.0 / x.sqrt()), work.clone(), trust)?;
    let c = mode_ladders(&work)?;
    let c_dag: Vec<TruncatedOperator> = c.iter().map(|x| x.adjoint()).collect();

    let headline_trust = (trust / 2).max(1);
    let head = work.trust_indices(headline_trust);
    let levels = trust;
    let mut edge_profile = vec![0.0f64; levels];
    let (mut a_res, mut b_res, mut a_full, mut b_full) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for j in 0..pair.modes() {
        let a_w = submatrix(pair.a()[j].matrix(), &idx, &idx);
        let b_w = submatrix(pair.b()[j].matrix(), &idx, &idx);
        let ra = a_w - t.matrix() * c[j].matrix() * t_inv.matrix();
        let rb = b_w - t.matrix() * c_dag[j].matrix() * t_inv.matrix();
        a_full = a_full.max(ra.norm());
        b_full = b_full.max(rb.norm());
        a_res = a_res.max(submatrix(&ra, &head, &head).norm());
        b_res = b_res.max(submatrix(&rb, &head, &head).norm());
        for r in 0..ra.nrows() {
            let level = work.multi(r).max_component();
            let row = ra.row(r).iter().chain(rb.row(r).iter()).map(|z| z.norm()).fold(0.0, f64::max);
            edge_profile[level] = edge_profile[level].max(row);
        }
    }

    let hats: Vec<CVector> = system
        .indices()
        .iter()
        .zip(system.phi())
        .filter(|(index, _)| index.max_component() < headline_trust)
        .map(|(_, v)| t_inv.matrix() * crate::fock::subvector(v, &idx))
        .collect();
    let orthonormality = if hats.is_empty() {
        0.0
    } else {
        let h = CMatrix::from_columns(&hats);
        let g = h.adjoint() * h;
        (g - CMatrix::identity(hats.len(), hats.len())).iter().map(|z| z.norm()).fold(0.0, f64::max)
    };

    Ok(SimilarityWitness {
        t,
        t_inv,
        c,
        c_dag,
        working_trust: trust,
        headline_trust,
        a_residual: a_res,
        b_residual: b_res,
        a_residual_full: a_full,
        b_residual_full: b_full,
        orthonormality,
        edge_profile,
        symmetrization_defect,
        condition: spec.max() / spec.min(),
    })
}

/// `a_j = T c_j T^-1`, `b_j = T c_j^dagger T^-1` for an invertible `T`.
///
/// `T` is rejected when its condition number exceeds `max_condition`; the
/// commutator is then asserted on the leading half of the truncation.
pub fn debosonize(
    c: &[TruncatedOperator],
    c_dag: &[TruncatedOperator],
    t: &TruncatedOperator,
    tol: &Tolerances,
) -> Result<PseudoBosonPair> {
    if c.len() != c_dag.len() || c.is_empty() {
        return Err(Error::Shape("need matching lowering and raising operators".into()));
    }
    let dim = t.dim();
    let (condition, t_inv) = if crate::fock::hermitian_defect(t.matrix()) <= tol.hermitian {
        let spec = HermitianSpectrum::new(t.matrix(), tol.hermitian)?;
        let smallest = spec.values.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        let largest = spec.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if smallest == 0.0 {
            return Err(Error::Singular);
        }
        (largest / smallest, spec.map(|x| 1.0 / x))
    } else {
        let sv = t.matrix().clone().singular_values();
        let largest = sv.max();
        let smallest = sv.min();
        let inv = t.matrix().clone().try_inverse().ok_or(Error::Singular)?;
        (if smallest > 0.0 { largest / smallest } else { f64::INFINITY }, inv)
    };
    if condition > tol.max_condition {
        return Err(Error::IllConditioned { condition, limit: tol.max_condition });
    }
    let t_inv = TruncatedOperator::new(t_inv, t.layout().clone(), t.trust())?;
    let conj = |x: &TruncatedOperator| &(t * x) * &t_inv;
    let a: Vec<TruncatedOperator> = c.iter().map(conj).collect();
    let b: Vec<TruncatedOperator> = c_dag.iter().map(conj).collect();
    let pair = PseudoBosonPair::new(a, b)?;
    let check = t.layout().min_cutoff().div_ceil(2);
    let tolerance = tol.commutator.max(tol.scaled(dim, condition));
    pair.check_commutator(check, tolerance)?;
    Ok(pair)
}
