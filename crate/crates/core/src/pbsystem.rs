//! Pseudo-boson pairs, their vacua and the biorthogonal families generated from them.

use nalgebra::SVD;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{submatrix, CMatrix, CVector, FockBasisIndex, ModeLayout, TruncatedOperator, C64, ONE, ZERO};
use crate::tolerance::Tolerances;

/// Lowering operators `a_j` and raising operators `b_j` with `[a_j, b_k] = delta_jk`.
#[derive(Debug, Clone)]
pub struct PseudoBosonPair {
    a: Vec<TruncatedOperator>,
    b: Vec<TruncatedOperator>,
}

impl PseudoBosonPair {
    pub fn new(a: Vec<TruncatedOperator>, b: Vec<TruncatedOperator>) -> Result<Self> {
        let Some(first) = a.first() else {
            return Err(Error::Shape("a pair needs at least one mode".into()));
        };
        let layout = first.layout();
        if a.len() != b.len() || a.len() != layout.modes() {
            return Err(Error::Shape(format!(
                "{} lowering and {} raising operators for a {}-mode layout",
                a.len(),
                b.len(),
                layout.modes()
            )));
        }
        if a.iter().chain(&b).any(|op| op.layout() != layout) {
            return Err(Error::Shape("operators of a pair must share one layout".into()));
        }
        Ok(Self { a, b })
    }

    pub fn single(a: TruncatedOperator, b: TruncatedOperator) -> Result<Self> {
        Self::new(vec![a], vec![b])
    }

    pub fn a(&self) -> &[TruncatedOperator] {
        &self.a
    }

    pub fn b(&self) -> &[TruncatedOperator] {
        &self.b
    }

    pub fn layout(&self) -> &ModeLayout {
        self.a[0].layout()
    }

    pub fn modes(&self) -> usize {
        self.a.len()
    }

    pub fn dim(&self) -> usize {
        self.a[0].dim()
    }

    /// Smallest trust among all operators of the pair.
    pub fn trust(&self) -> usize {
        self.a.iter().chain(&self.b).map(|op| op.trust()).min().unwrap_or(0)
    }

    /// `N_j = b_j a_j`.
    pub fn number_op(&self, mode: usize) -> TruncatedOperator {
        &self.b[mode] * &self.a[mode]
    }

    /// `N_j^dagger = a_j^dagger b_j^dagger`.
    pub fn number_op_adjoint(&self, mode: usize) -> TruncatedOperator {
        self.number_op(mode).adjoint()
    }

    /// Largest Frobenius defect of the canonical commutation rules on the trust region.
    pub fn commutator_defect(&self, trust: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.modes() {
            for k in 0..self.modes() {
                let delta = if j == k { ONE } else { ZERO };
                worst = worst.max(self.a[j].commutator(&self.b[k]).defect_from_scalar(delta, trust));
                if j < k {
                    worst = worst.max(self.a[j].commutator(&self.a[k]).defect_from_scalar(ZERO, trust));
                    worst = worst.max(self.b[j].commutator(&self.b[k]).defect_from_scalar(ZERO, trust));
                }
            }
        }
        worst
    }

    pub fn check_commutator(&self, trust: usize, tolerance: f64) -> Result<f64> {
        self.layout().check_trust(trust)?;
        let defect = self.commutator_defect(trust);
        if defect > tolerance {
            return Err(Error::CommutatorDefect { defect, tolerance });
        }
        Ok(defect)
    }
}

/// Unit vector spanning the one-dimensional numerical kernel of `op`.
pub fn vacuum_solve(op: &TruncatedOperator, tol: &Tolerances) -> Result<CVector> {
    joint_vacuum(std::slice::from_ref(op), tol)
}

/// Unit vector annihilated by every operator in `ops`.
///
/// The kernel is read off the singular values of the stacked operators. If the
/// full finite sections have no kernel (the true vacuum decays too slowly for
/// the truncation edge), the rows of the top level of each mode are dropped and
/// the kernel of the trimmed operator is accepted provided it carries almost no
/// weight near the truncation edge.
pub fn joint_vacuum(ops: &[TruncatedOperator], tol: &Tolerances) -> Result<CVector> {
    let Some(first) = ops.first() else {
        return Err(Error::Shape("no operators to annihilate".into()));
    };
    let layout = first.layout().clone();
    let n = layout.total();
    let stacked = stack_rows(ops, &layout, false);
    let (values, kernel) = small_singular(&stacked, tol);
    match kernel.len() {
        1 => return Ok(fix_phase(kernel.into_iter().next().unwrap_or_else(|| CVector::zeros(n)))),
        k if k > 1 => return Err(degenerate(&values, &stacked, tol)),
        _ => {}
    }
    let smallest = values.last().copied().unwrap_or(0.0);
    let tolerance = kernel_tolerance(&stacked, tol);

    let trimmed = stack_rows(ops, &layout, true);
    let (tvalues, tkernel) = small_singular(&trimmed, tol);
    if tkernel.len() > 1 {
        return Err(degenerate(&tvalues, &trimmed, tol));
    }
    match tkernel.into_iter().next() {
        Some(v) if edge_weight(&v, &layout) <= tol.vacuum_edge => Ok(fix_phase(v)),
        _ => Err(Error::NoVacuum { smallest, tolerance }),
    }
}

fn kernel_tolerance(m: &CMatrix, tol: &Tolerances) -> f64 {
    let (values, _) = singular_pairs(m);
    tol.scaled(m.ncols(), values.first().copied().unwrap_or(0.0))
}

fn degenerate(values: &[f64], m: &CMatrix, tol: &Tolerances) -> Error {
    let tolerance = kernel_tolerance(m, tol);
    Error::DegenerateVacuum {
        singular_values: values.iter().copied().filter(|&s| s <= tolerance).collect(),
        tolerance,
    }
}

/// Singular values in descending order with the matching right singular vectors.
fn singular_pairs(m: &CMatrix) -> (Vec<f64>, Vec<CVector>) {
    let cols = m.ncols();
    let square = if m.nrows() < cols {
        let mut padded = CMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = SVD::new(square, false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let values = order.iter().map(|&k| svd.singular_values[k]).collect();
    let vectors = order.iter().map(|&k| v_t.row(k).adjoint()).collect();
    (values, vectors)
}

/// Singular values and the right singular vectors below the kernel tolerance.
fn small_singular(m: &CMatrix, tol: &Tolerances) -> (Vec<f64>, Vec<CVector>) {
    let (values, vectors) = singular_pairs(m);
    let tolerance = tol.scaled(m.ncols(), values.first().copied().unwrap_or(0.0));
    let kernel = values.iter().zip(vectors).filter(|(&s, _)| s <= tolerance).map(|(_, v)| v).collect();
    (values, kernel)
}

fn stack_rows(ops: &[TruncatedOperator], layout: &ModeLayout, trim_edge: bool) -> CMatrix {
    let n = layout.total();
    let mut rows: Vec<(usize, usize)> = Vec::new();
    let per_mode = ops.len() == layout.modes();
    for j in 0..ops.len() {
        for i in 0..n {
            if trim_edge {
                let idx = layout.multi(i);
                let at_edge = |m: usize| idx.0[m] + 1 == layout.cutoffs()[m];
                let drop = if per_mode { at_edge(j) } else { (0..layout.modes()).any(at_edge) };
                if drop {
                    continue;
                }
            }
            rows.push((j, i));
        }
    }
    CMatrix::from_fn(rows.len(), n, |r, c| {
        let (j, i) = rows[r];
        ops[j].matrix()[(i, c)]
    })
}

/// Weight of `v` in the top quarter of any mode.
fn edge_weight(v: &CVector, layout: &ModeLayout) -> f64 {
    let mut edge = 0.0;
    for i in 0..v.len() {
        let idx = layout.multi(i);
        let near = idx.0.iter().zip(layout.cutoffs()).any(|(&n, &m)| n + m.div_ceil(4) >= m);
        if near {
            edge += v[i].norm_sqr();
        }
    }
    (edge / v.norm_squared()).sqrt()
}

/// Unit norm, first significant coefficient real and positive.
fn fix_phase(v: CVector) -> CVector {
    let v = v.normalize();
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    match v.iter().find(|z| z.norm() > 1e-8 * peak) {
        Some(z) => {
            let phase = z.conj() / z.norm();
            v * phase
        }
        None => v,
    }
}

/// `{ raiser^n vacuum / sqrt(n!) : n = 0..=n_max }`.
pub fn ladder_generate(raiser: &TruncatedOperator, vacuum: &CVector, n_max: usize) -> Result<Vec<CVector>> {
    let layout = raiser.layout().clone();
    let (_, family) = generate_multi(std::slice::from_ref(raiser), vacuum, n_max, &layout)?;
    Ok(family)
}

/// All multi-indices with every component at most `n_max`, lexicographic with mode 0 slowest.
pub fn box_indices(modes: usize, n_max: usize) -> Vec<FockBasisIndex> {
    let side = n_max + 1;
    let count = side.pow(modes as u32);
    (0..count)
        .map(|mut k| {
            let mut n = vec![0; modes];
            for slot in n.iter_mut().rev() {
                *slot = k % side;
                k /= side;
            }
            FockBasisIndex(n)
        })
        .collect()
}

fn generate_multi(
    raisers: &[TruncatedOperator],
    vacuum: &CVector,
    n_max: usize,
    layout: &ModeLayout,
) -> Result<(Vec<FockBasisIndex>, Vec<CVector>)> {
    for r in raisers {
        if n_max >= r.trust() {
            return Err(Error::TruncationOverrun { n_max, trust: r.trust() });
        }
    }
    if vacuum.len() != layout.total() {
        return Err(Error::Shape(format!("vacuum has {} entries, layout needs {}", vacuum.len(), layout.total())));
    }
    let modes = raisers.len();
    let indices = box_indices(modes, n_max);
    let side = n_max + 1;
    let mut family: Vec<CVector> = Vec::with_capacity(indices.len());
    for (pos, idx) in indices.iter().enumerate() {
        // Raise along the last excited mode, so mode 0 is applied first.
        let v = match idx.0.iter().rposition(|&n| n > 0) {
            None => vacuum.clone(),
            Some(k) => {
                let stride = side.pow((modes - 1 - k) as u32);
                let prev = &family[pos - stride];
                raisers[k].apply(prev) / C64::new((idx.0[k] as f64).sqrt(), 0.0)
            }
        };
        family.push(v);
    }
    Ok((indices, family))
}

/// Per-index norms of the two families.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormSample {
    pub index: FockBasisIndex,
    pub phi_norm: f64,
    pub psi_norm: f64,
    pub product: f64,
}

/// The families `phi_n = b^n phi_0 / sqrt(n!)` and `psi_n = (a^dagger)^n psi_0 / sqrt(n!)`.
#[derive(Debug, Clone)]
pub struct BiorthogonalSystem {
    layout: ModeLayout,
    indices: Vec<FockBasisIndex>,
    phi: Vec<CVector>,
    psi: Vec<CVector>,
    n_max: usize,
    overlap: C64,
    norm_profile: Vec<NormSample>,
}

impl BiorthogonalSystem {
    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn indices(&self) -> &[FockBasisIndex] {
        &self.indices
    }

    pub fn phi(&self) -> &[CVector] {
        &self.phi
    }

    pub fn psi(&self) -> &[CVector] {
        &self.psi
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// `<Psi_0, phi_0>` of the vacua before normalization, with `phi_0` of unit norm.
    pub fn raw_overlap(&self) -> C64 {
        self.overlap
    }

    pub fn norm_profile(&self) -> &[NormSample] {
        &self.norm_profile
    }

    /// Position of `index` in the family, if generated.
    pub fn position(&self, index: &FockBasisIndex) -> Option<usize> {
        if index.modes() != self.layout.modes() || index.max_component() > self.n_max {
            return None;
        }
        let side = self.n_max + 1;
        Some(index.0.iter().fold(0, |acc, &n| acc * side + n))
    }

    /// Columns `phi_n` as a matrix.
    pub fn phi_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.phi)
    }

    pub fn psi_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.psi)
    }

    /// The subsystem of indices with every component at most `n_max`.
    pub fn truncated(&self, n_max: usize) -> Self {
        if n_max >= self.n_max {
            return self.clone();
        }
        let keep: Vec<usize> = (0..self.len()).filter(|&k| self.indices[k].max_component() <= n_max).collect();
        Self {
            layout: self.layout.clone(),
            indices: keep.iter().map(|&k| self.indices[k].clone()).collect(),
            phi: keep.iter().map(|&k| self.phi[k].clone()).collect(),
            psi: keep.iter().map(|&k| self.psi[k].clone()).collect(),
            n_max,
            overlap: self.overlap,
            norm_profile: keep.iter().map(|&k| self.norm_profile[k].clone()).collect(),
        }
    }
}

/// Solve both vacua, generate both families up to `n_max` per mode and normalize
/// so that `<Psi_0, phi_0> = 1` (the rescaling is put on `Psi_0`).
pub fn build_system(pair: &PseudoBosonPair, n_max: usize, tol: &Tolerances) -> Result<BiorthogonalSystem> {
    let layout = pair.layout().clone();
    let phi0 = joint_vacuum(pair.a(), tol)?;
    let b_dag: Vec<TruncatedOperator> = pair.b().iter().map(|b| b.adjoint()).collect();
    let psi0 = joint_vacuum(&b_dag, tol)?;
    let overlap = psi0.dotc(&phi0);
    if overlap.norm() <= tol.scaled(layout.total(), 1.0) {
        return Err(Error::NormalizationImpossible { overlap: overlap.norm() });
    }
    let psi0 = psi0 / overlap.conj();
    let (indices, phi) = generate_multi(pair.b(), &phi0, n_max, &layout)?;
    let a_dag: Vec<TruncatedOperator> = pair.a().iter().map(|a| a.adjoint()).collect();
    let (_, psi) = generate_multi(&a_dag, &psi0, n_max, &layout)?;
    let norm_profile = indices
        .iter()
        .zip(phi.iter().zip(&psi))
        .map(|(index, (p, q))| NormSample {
            index: index.clone(),
            phi_norm: p.norm(),
            psi_norm: q.norm(),
            product: p.norm() * q.norm(),
        })
        .collect();
    Ok(BiorthogonalSystem { layout, indices, phi, psi, n_max, overlap, norm_profile })
}

/// Deviation of the Gram matrix `<Psi_n, phi_m>` from the identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramReport {
    pub max_deviation: f64,
    pub worst: (FockBasisIndex, FockBasisIndex),
}

pub fn gram_check(system: &BiorthogonalSystem) -> GramReport {
    let g = system.psi_matrix().adjoint() * system.phi_matrix();
    let mut max_deviation = 0.0;
    let mut worst = (0, 0);
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let want = if i == j { ONE } else { ZERO };
            let d = (g[(i, j)] - want).norm();
            if d > max_deviation || d.is_nan() {
                max_deviation = d;
                worst = (i, j);
            }
        }
    }
    GramReport { max_deviation, worst: (system.indices[worst.0].clone(), system.indices[worst.1].clone()) }
}

/// Relative residuals of `N_j phi_n = n_j phi_n` and `N_j^dagger Psi_n = n_j Psi_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenRow {
    pub index: FockBasisIndex,
    pub phi: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenReport {
    pub rows: Vec<EigenRow>,
    pub max_phi: f64,
    pub max_psi: f64,
}

impl EigenReport {
    pub fn max(&self) -> f64 {
        self.max_phi.max(self.max_psi)
    }
}

/// Residuals are measured on the rows of the trust region `trust`, where the
/// finite sections of `N_j` are faithful.
pub fn eigen_check(system: &BiorthogonalSystem, pair: &PseudoBosonPair, trust: usize) -> Result<EigenReport> {
    system.layout.check_trust(trust)?;
    let rows = system.layout.trust_indices(trust);
    let number: Vec<(TruncatedOperator, TruncatedOperator)> =
        (0..pair.modes()).map(|j| (pair.number_op(j), pair.number_op_adjoint(j))).collect();
    let restricted = |v: &CVector| -> f64 { rows.iter().map(|&r| v[r].norm_sqr()).sum::<f64>().sqrt() };
    let mut out = Vec::with_capacity(system.len());
    let (mut max_phi, mut max_psi) = (0.0f64, 0.0f64);
    for (k, index) in system.indices.iter().enumerate() {
        let (mut rp, mut rq) = (0.0f64, 0.0f64);
        for (j, (n_op, n_dag)) in number.iter().enumerate() {
            let nj = C64::new(index.0[j] as f64, 0.0);
            let p = &system.phi[k];
            let q = &system.psi[k];
            rp = rp.max(restricted(&(n_op.apply(p) - p * nj)) / p.norm());
            rq = rq.max(restricted(&(n_dag.apply(q) - q * nj)) / q.norm());
        }
        max_phi = max_phi.max(rp);
        max_psi = max_psi.max(rq);
        out.push(EigenRow { index: index.clone(), phi: rp, psi: rq });
    }
    Ok(EigenReport { rows: out, max_phi, max_psi })
}

/// `|| P_trust - sum_n |phi_n><Psi_n| ||` on the trust region, for both orderings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompletenessReport {
    pub phi_psi: f64,
    pub psi_phi: f64,
}

impl CompletenessReport {
    pub fn max(&self) -> f64 {
        self.phi_psi.max(self.psi_phi)
    }
}

pub fn basis_completeness(system: &BiorthogonalSystem, trust: usize) -> Result<CompletenessReport> {
    system.layout.check_trust(trust)?;
    let rows = system.layout.trust_indices(trust);
    if system.n_max + 1 < trust {
        return Err(Error::UnderSpanned { available: system.n_max + 1, required: trust });
    }
    let cols: Vec<usize> = (0..system.len()).collect();
    let phi = submatrix(&system.phi_matrix(), &rows, &cols);
    let psi = submatrix(&system.psi_matrix(), &rows, &cols);
    let id = CMatrix::identity(rows.len(), rows.len());
    Ok(CompletenessReport {
        phi_psi: (&phi * psi.adjoint() - &id).norm(),
        psi_phi: (&psi * phi.adjoint() - &id).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_ladder, mode_ladders, I};

    fn standard(dim: usize) -> PseudoBosonPair {
        let c = build_ladder(dim).unwrap();
        PseudoBosonPair::single(c.clone(), c.adjoint()).unwrap()
    }

    fn swanson(dim: usize, theta: f64) -> PseudoBosonPair {
        let c = build_ladder(dim).unwrap();
        let (cs, sn) = (C64::new(theta.cos(), 0.0), I * theta.sin());
        let a = &c.scale(cs) + &c.adjoint().scale(sn);
        let b = &c.adjoint().scale(cs) + &c.scale(sn);
        PseudoBosonPair::single(a, b).unwrap()
    }

    #[test]
    fn fock_vacuum() {
        let v = vacuum_solve(&build_ladder(10).unwrap(), &Tolerances::default()).unwrap();
        assert!((v[0] - ONE).norm() < 1e-14);
        assert!(v.rows(1, 9).norm() < 1e-14);
    }

    #[test]
    fn shifted_vacuum_has_poisson_coefficients() {
        // (c - 1/beta) v = 0 gives v_n / v_0 = beta^-n / sqrt(n!).
        let beta = 2.0;
        let c = build_ladder(30).unwrap();
        let op = c.shift(C64::new(-1.0 / beta, 0.0));
        let v = vacuum_solve(&op, &Tolerances::default()).unwrap();
        let mut want = 1.0;
        for n in 0..12 {
            if n > 0 {
                want *= 0.5 / (n as f64).sqrt();
            }
            assert!((v[n] / v[0] - C64::new(want, 0.0)).norm() < 1e-13, "n = {n}");
        }
        assert!(v[0].im.abs() < 1e-15 && v[0].re > 0.0);
    }

    #[test]
    fn squeezed_vacuum_recursion() {
        let theta = std::f64::consts::PI / 8.0;
        let pair = swanson(48, theta);
        let v = vacuum_solve(&pair.a()[0], &Tolerances::default()).unwrap();
        let t = theta.tan();
        for n in (0..20).step_by(2) {
            let ratio = v[n + 2] / v[n];
            let want = -I * t * ((n as f64 + 1.0) / (n as f64 + 2.0)).sqrt();
            assert!((ratio - want).norm() < 1e-10, "n = {n}: {ratio} vs {want}");
            assert!(v[n + 1].norm() < 1e-13);
        }
    }

    #[test]
    fn squeezed_vacuum_matches_dense_null_space() {
        // Independent oracle: last column of the unitary from an eigen-decomposition of A^dagger A.
        let pair = swanson(40, std::f64::consts::PI / 8.0);
        let a = pair.a()[0].matrix();
        let ata = a.adjoint() * a;
        let eig = nalgebra::SymmetricEigen::new(ata);
        let k = (0..40).min_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j])).unwrap();
        let null = eig.eigenvectors.column(k).into_owned();
        let v = vacuum_solve(&pair.a()[0], &Tolerances::default()).unwrap();
        assert!((1.0 - v.dotc(&null).norm()).abs() < 1e-10);
    }

    #[test]
    fn identity_has_no_vacuum() {
        let id = TruncatedOperator::identity(&ModeLayout::single(8).unwrap());
        assert!(matches!(vacuum_solve(&id, &Tolerances::default()), Err(Error::NoVacuum { .. })));
    }

    #[test]
    fn zero_operator_is_degenerate() {
        let z = TruncatedOperator::zeros(&ModeLayout::single(5).unwrap());
        match vacuum_solve(&z, &Tolerances::default()) {
            Err(Error::DegenerateVacuum { singular_values, .. }) => assert_eq!(singular_values.len(), 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn number_states_from_standard_raiser() {
        let c = build_ladder(8).unwrap();
        let mut e0 = CVector::zeros(8);
        e0[0] = ONE;
        let family = ladder_generate(&c.adjoint(), &e0, 6).unwrap();
        for (n, v) in family.iter().enumerate() {
            for k in 0..8 {
                let want = if k == n { 1.0 } else { 0.0 };
                assert!((v[k].re - want).abs() < 1e-13 && v[k].im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn overrun_is_rejected() {
        let c = build_ladder(8).unwrap();
        let e0 = CVector::from_element(8, ONE);
        let err = ladder_generate(&c.adjoint(), &e0, 7).unwrap_err();
        assert_eq!(err, Error::TruncationOverrun { n_max: 7, trust: 7 });
    }

    #[test]
    fn swanson_family_norms_increase() {
        let theta = std::f64::consts::PI / 8.0;
        let pair = swanson(40, theta);
        let tol = Tolerances::default();
        let v = vacuum_solve(&pair.a()[0], &tol).unwrap();
        let family = ladder_generate(&pair.b()[0], &v, 6).unwrap();
        // Oracle: brute-force matrix powers.
        let b = pair.b()[0].matrix();
        let mut power = CMatrix::identity(40, 40);
        let mut fact = 1.0;
        let mut last = 0.0;
        for (n, f) in family.iter().enumerate() {
            if n > 0 {
                power = b * &power;
                fact *= n as f64;
            }
            let brute = &power * &v / C64::new(fact.sqrt(), 0.0);
            assert!((&brute - f).norm() < 1e-12 * brute.norm());
            assert!(f.norm() > last);
            last = f.norm();
        }
    }

    #[test]
    fn standard_system_is_self_dual() {
        let pair = standard(16);
        let sys = build_system(&pair, 7, &Tolerances::default()).unwrap();
        for (p, q) in sys.phi().iter().zip(sys.psi()) {
            assert!((p - q).norm() < 1e-14);
        }
        assert!(sys.norm_profile().iter().all(|s| (s.product - 1.0).abs() < 1e-14));
        assert!(gram_check(&sys).max_deviation < 1e-14);
        assert!(eigen_check(&sys, &pair, 8).unwrap().max() < 1e-14);
        assert!(basis_completeness(&sys, 8).unwrap().max() < 1e-14);
    }

    #[test]
    fn completeness_needs_enough_vectors() {
        let pair = standard(16);
        let sys = build_system(&pair, 4, &Tolerances::default()).unwrap();
        assert_eq!(basis_completeness(&sys, 8).unwrap_err(), Error::UnderSpanned { available: 5, required: 8 });
    }

    #[test]
    fn swanson_gram_is_identity() {
        let pair = swanson(64, 0.3);
        let sys = build_system(&pair, 16, &Tolerances::default()).unwrap();
        // Oracle: dense Gram matrix computed directly from the columns.
        let g = sys.psi_matrix().adjoint() * sys.phi_matrix();
        let dense = (g - CMatrix::identity(17, 17)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dense < 1e-8, "{dense:e}");
        assert!((gram_check(&sys).max_deviation - dense).abs() < 1e-15);
    }

    #[test]
    fn ladder_relations_on_swanson() {
        let pair = swanson(48, 0.3);
        let sys = build_system(&pair, 12, &Tolerances::default()).unwrap();
        let rows = sys.layout().trust_indices(24);
        for n in 1..12 {
            let down = pair.a()[0].apply(&sys.phi()[n]) - &sys.phi()[n - 1] * C64::new((n as f64).sqrt(), 0.0);
            let err: f64 = rows.iter().map(|&r| down[r].norm_sqr()).sum::<f64>().sqrt();
            assert!(err < 1e-9 * sys.phi()[n].norm(), "n = {n}: {err:e}");
        }
    }

    #[test]
    fn two_mode_vacuum_and_order() {
        let layout = ModeLayout::new(vec![6, 6]).unwrap();
        let c = mode_ladders(&layout).unwrap();
        let pair = PseudoBosonPair::new(c.clone(), c.iter().map(|x| x.adjoint()).collect()).unwrap();
        let sys = build_system(&pair, 3, &Tolerances::default()).unwrap();
        assert_eq!(sys.len(), 16);
        let idx = FockBasisIndex(vec![2, 1]);
        let k = sys.position(&idx).unwrap();
        assert_eq!(sys.indices()[k], idx);
        let lin = layout.linear(&idx).unwrap();
        assert!((sys.phi()[k][lin] - ONE).norm() < 1e-13);
        assert!(pair.commutator_defect(5) < 1e-13);
    }
}
