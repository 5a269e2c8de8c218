//! Truncated Fock spaces: multi-index layout, operators with a trust region,
//! the bosonic lowering operator and tensor lifts.
//!
//! A truncation keeps `m` levels per mode. Products of finite sections are only
//! faithful on the leading levels, so every operator carries a `trust`: the
//! number of leading levels per mode on which it agrees with the infinite
//! operator it stands for. Algebra takes the minimum of the operands' trusts;
//! checks choose their own (smaller) evaluation region explicitly.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Occupation numbers `(n_1, ..., n_d)` of a multi-mode Fock basis vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FockBasisIndex(pub Vec<usize>);

impl FockBasisIndex {
    pub fn modes(&self) -> usize {
        self.0.len()
    }

    /// Total excitation number.
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn max_component(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// `sqrt(n_1! ... n_d!)`.
    pub fn sqrt_factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&n| (1..=n).map(|k| (k as f64).sqrt()).product::<f64>())
            .product()
    }
}

/// Per-mode cutoffs of a tensor-product truncation, indexed row-major
/// (mode 0 is the slowest-varying index).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeLayout {
    cutoffs: Vec<usize>,
}

impl ModeLayout {
    pub fn new(cutoffs: Vec<usize>) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::Shape("a layout needs at least one mode".into()));
        }
        if let Some(&dim) = cutoffs.iter().find(|&&m| m < 2) {
            return Err(Error::InvalidDimension { dim });
        }
        Ok(Self { cutoffs })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    /// `modes` copies of the same cutoff.
    pub fn uniform(dim: usize, modes: usize) -> Result<Self> {
        Self::new(vec![dim; modes])
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn modes(&self) -> usize {
        self.cutoffs.len()
    }

    /// Smallest per-mode cutoff.
    pub fn min_cutoff(&self) -> usize {
        self.cutoffs.iter().copied().min().unwrap_or(0)
    }

    /// Total Hilbert-space dimension.
    pub fn total(&self) -> usize {
        self.cutoffs.iter().product()
    }

    pub fn linear(&self, index: &FockBasisIndex) -> Result<usize> {
        if index.modes() != self.modes() {
            return Err(Error::Shape(format!(
                "index has {} modes, layout has {}",
                index.modes(),
                self.modes()
            )));
        }
        let mut k = 0;
        for (&n, &m) in index.0.iter().zip(&self.cutoffs) {
            if n >= m {
                return Err(Error::Shape(format!("occupation {n} exceeds cutoff {m}")));
            }
            k = k * m + n;
        }
        Ok(k)
    }

    pub fn multi(&self, mut linear: usize) -> FockBasisIndex {
        let mut n = vec![0; self.modes()];
        for (slot, &m) in n.iter_mut().zip(&self.cutoffs).rev() {
            *slot = linear % m;
            linear /= m;
        }
        FockBasisIndex(n)
    }

    /// Linear indices whose occupations are all below `trust`, in increasing order.
    pub fn trust_indices(&self, trust: usize) -> Vec<usize> {
        (0..self.total())
            .filter(|&k| self.multi(k).0.iter().all(|&n| n < trust))
            .collect()
    }

    /// Validate an evaluation region against the cutoffs.
    pub fn check_trust(&self, trust: usize) -> Result<()> {
        if trust == 0 || trust > self.min_cutoff() {
            return Err(Error::InvalidTrust { trust, dim: self.min_cutoff() });
        }
        Ok(())
    }
}

/// Finite section of an operator on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    matrix: CMatrix,
    layout: ModeLayout,
    trust: usize,
}

impl TruncatedOperator {
    pub fn new(matrix: CMatrix, layout: ModeLayout, trust: usize) -> Result<Self> {
        let n = layout.total();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, layout needs {n}x{n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        layout.check_trust(trust)?;
        Ok(Self { matrix, layout, trust })
    }

    /// Single-mode operator trusted on the whole truncation.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let layout = ModeLayout::single(matrix.nrows())?;
        let trust = layout.min_cutoff();
        Self::new(matrix, layout, trust)
    }

    pub fn identity(layout: &ModeLayout) -> Self {
        let n = layout.total();
        Self { matrix: CMatrix::identity(n, n), layout: layout.clone(), trust: layout.min_cutoff() }
    }

    pub fn zeros(layout: &ModeLayout) -> Self {
        let n = layout.total();
        Self { matrix: CMatrix::zeros(n, n), layout: layout.clone(), trust: layout.min_cutoff() }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn trust(&self) -> usize {
        self.trust
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn with_trust(mut self, trust: usize) -> Result<Self> {
        self.layout.check_trust(trust)?;
        self.trust = trust;
        Ok(self)
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), layout: self.layout.clone(), trust: self.trust }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { matrix: &self.matrix * s, layout: self.layout.clone(), trust: self.trust }
    }

    /// `self + s * I`.
    pub fn shift(&self, s: C64) -> Self {
        let mut m = self.matrix.clone();
        for k in 0..m.nrows() {
            m[(k, k)] += s;
        }
        Self { matrix: m, layout: self.layout.clone(), trust: self.trust }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }

    /// Rows and columns of the trust region `trust`.
    pub fn trust_block(&self, trust: usize) -> CMatrix {
        let idx = self.layout.trust_indices(trust);
        submatrix(&self.matrix, &idx, &idx)
    }

    /// Frobenius distance from `s * I` on the trust region.
    pub fn defect_from_scalar(&self, s: C64, trust: usize) -> f64 {
        let mut b = self.trust_block(trust);
        for k in 0..b.nrows() {
            b[(k, k)] -= s;
        }
        b.norm()
    }

    /// Relative anti-Hermitian part, `||A - A^dagger|| / max(||A||, 1)`.
    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.matrix)
    }

    fn combine(&self, other: &Self, op: &str) -> (ModeLayout, usize) {
        assert!(
            self.layout == other.layout,
            "cannot {op} operators on layouts {:?} and {:?}",
            self.layout.cutoffs,
            other.layout.cutoffs
        );
        (self.layout.clone(), self.trust.min(other.trust))
    }
}

impl Add for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn add(self, rhs: Self) -> TruncatedOperator {
        let (layout, trust) = self.combine(rhs, "add");
        TruncatedOperator { matrix: &self.matrix + &rhs.matrix, layout, trust }
    }
}

impl Sub for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn sub(self, rhs: Self) -> TruncatedOperator {
        let (layout, trust) = self.combine(rhs, "subtract");
        TruncatedOperator { matrix: &self.matrix - &rhs.matrix, layout, trust }
    }
}

impl Mul for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn mul(self, rhs: Self) -> TruncatedOperator {
        let (layout, trust) = self.combine(rhs, "multiply");
        TruncatedOperator { matrix: &self.matrix * &rhs.matrix, layout, trust }
    }
}

/// Relative anti-Hermitian part of a square matrix.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm() / m.norm().max(1.0)
}

/// Rows `rows` and columns `cols` of `m`.
pub fn submatrix(m: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Entries `idx` of `v`.
pub fn subvector(v: &CVector, idx: &[usize]) -> CVector {
    CVector::from_fn(idx.len(), |i, _| v[idx[i]])
}

/// Bosonic lowering operator on `dim` levels: `c e_n = sqrt(n) e_{n-1}`.
///
/// The finite section of `c` itself is exact; its trust is `dim - 1` because the
/// adjoint loses `e_dim` and the commutator fails in the last level.
pub fn build_ladder(dim: usize) -> Result<TruncatedOperator> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim });
    }
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    TruncatedOperator::new(m, ModeLayout::single(dim)?, dim - 1)
}

/// `I (x) ... (x) op (x) ... (x) I` with `op` acting on `mode` of `layout`.
pub fn tensor_lift(op: &TruncatedOperator, mode: usize, layout: &ModeLayout) -> Result<TruncatedOperator> {
    if mode >= layout.modes() {
        return Err(Error::InvalidMode { mode, modes: layout.modes() });
    }
    if op.layout.modes() != 1 || op.dim() != layout.cutoffs[mode] {
        return Err(Error::Shape(format!(
            "cannot lift a {}-level operator onto mode {mode} with cutoff {}",
            op.dim(),
            layout.cutoffs[mode]
        )));
    }
    let before: usize = layout.cutoffs[..mode].iter().product();
    let after: usize = layout.cutoffs[mode + 1..].iter().product();
    let m = CMatrix::identity(before, before)
        .kronecker(&op.matrix)
        .kronecker(&CMatrix::identity(after, after));
    TruncatedOperator::new(m, layout.clone(), op.trust.min(layout.min_cutoff()))
}

/// Lowering operators for every mode of `layout`.
pub fn mode_ladders(layout: &ModeLayout) -> Result<Vec<TruncatedOperator>> {
    (0..layout.modes())
        .map(|j| tensor_lift(&build_ladder(layout.cutoffs[j])?, j, layout))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ladder_commutator_is_identity_except_last_level() {
        let c = build_ladder(8).unwrap();
        let comm = c.commutator(&c.adjoint());
        for k in 0..7 {
            assert!((comm.matrix()[(k, k)] - ONE).norm() < 1e-14);
        }
        assert!((comm.matrix()[(7, 7)] - C64::new(-7.0, 0.0)).norm() < 1e-12);
        assert_eq!(comm.trust(), 7);
        assert!(comm.defect_from_scalar(ONE, 7) < 1e-13);
    }

    #[test]
    fn number_operator_is_diagonal() {
        let c = build_ladder(6).unwrap();
        let n = &c.adjoint() * &c;
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { i as f64 } else { 0.0 };
                assert!((n.matrix()[(i, j)].re - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dim_one_is_rejected() {
        assert_eq!(build_ladder(1).unwrap_err(), Error::InvalidDimension { dim: 1 });
    }

    #[test]
    fn lift_checks_shapes() {
        let layout = ModeLayout::new(vec![3, 4]).unwrap();
        let c3 = build_ladder(3).unwrap();
        assert!(tensor_lift(&c3, 0, &layout).is_ok());
        assert!(matches!(tensor_lift(&c3, 1, &layout), Err(Error::Shape(_))));
        assert!(matches!(tensor_lift(&c3, 2, &layout), Err(Error::InvalidMode { .. })));
    }

    #[test]
    fn lifted_ladders_act_on_their_own_mode() {
        let layout = ModeLayout::new(vec![3, 4]).unwrap();
        let ladders = mode_ladders(&layout).unwrap();
        // c_1 e_(1,2) = sqrt(2) e_(1,1)
        let from = layout.linear(&FockBasisIndex(vec![1, 2])).unwrap();
        let to = layout.linear(&FockBasisIndex(vec![1, 1])).unwrap();
        assert!((ladders[1].matrix()[(to, from)].re - 2f64.sqrt()).abs() < 1e-15);
        let to0 = layout.linear(&FockBasisIndex(vec![0, 2])).unwrap();
        assert!((ladders[0].matrix()[(to0, from)].re - 1.0).abs() < 1e-15);
        let cross = ladders[0].commutator(&ladders[1].adjoint());
        assert!(cross.matrix().norm() < 1e-14);
    }

    #[test]
    fn trust_indices_select_the_leading_box() {
        let layout = ModeLayout::new(vec![3, 3]).unwrap();
        assert_eq!(layout.trust_indices(2), vec![0, 1, 3, 4]);
    }

    #[test]
    #[should_panic(expected = "cannot multiply")]
    fn mismatched_product_panics() {
        let _ = &build_ladder(3).unwrap() * &build_ladder(4).unwrap();
    }

    proptest! {
        #[test]
        fn linear_and_multi_are_inverse(cutoffs in prop::collection::vec(2usize..6, 1..4), seed in 0usize..10_000) {
            let layout = ModeLayout::new(cutoffs).unwrap();
            let k = seed % layout.total();
            let idx = layout.multi(k);
            prop_assert_eq!(layout.linear(&idx).unwrap(), k);
        }

        #[test]
        fn commutator_is_identity_on_trust(dim in 2usize..40) {
            let c = build_ladder(dim).unwrap();
            let comm = c.commutator(&c.adjoint());
            prop_assert_eq!(comm.trust(), dim - 1);
            prop_assert!(comm.defect_from_scalar(ONE, comm.trust()) < 1e-12);
        }

        #[test]
        fn lifted_commutators_on_trust(a in 2usize..6, b in 2usize..6) {
            let layout = ModeLayout::new(vec![a, b]).unwrap();
            let ladders = mode_ladders(&layout).unwrap();
            for j in 0..2 {
                for k in 0..2 {
                    let comm = ladders[j].commutator(&ladders[k].adjoint());
                    let want = if j == k { ONE } else { ZERO };
                    let t = comm.trust();
                    prop_assert!(comm.defect_from_scalar(want, t) < 1e-12);
                }
            }
        }
    }
}
