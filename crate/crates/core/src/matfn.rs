//! Matrix functions: Hermitian square roots and exponentials.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::fock::{hermitian_defect, CMatrix, TruncatedOperator, C64};
use crate::tolerance::Tolerances;

/// Largest argument of `exp` that stays finite in `f64`.
const EXP_LIMIT: f64 = 709.0;

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianSpectrum {
    /// Decompose `m`, rejecting it if its relative anti-Hermitian part exceeds `tolerance`.
    pub fn new(m: &CMatrix, tolerance: f64) -> Result<Self> {
        let defect = hermitian_defect(m);
        if defect > tolerance {
            return Err(Error::NotHermitian { defect, tolerance });
        }
        let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = CMatrix::from_fn(m.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(Self { values, vectors })
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `V f(Lambda) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let fj = f(lambda);
            scaled.column_mut(j).scale_mut(fj);
        }
        &scaled * self.vectors.adjoint()
    }
}

/// Positive square root of a Hermitian positive-semidefinite operator.
///
/// Eigenvalues in `[-eps_pd, 0)` are clipped to zero, with
/// `eps_pd = dim * eps * ||S||`; anything more negative is an error.
pub fn herm_sqrt(s: &TruncatedOperator, tol: &Tolerances) -> Result<TruncatedOperator> {
    let spec = HermitianSpectrum::new(s.matrix(), tol.hermitian)?;
    let floor = tol.positivity(s.dim(), spec.max().abs());
    if spec.min() < -floor {
        return Err(Error::NotPositive { eigenvalue: spec.min(), threshold: -floor });
    }
    let root = spec.map(|x| x.max(0.0).sqrt());
    TruncatedOperator::new(root, s.layout().clone(), s.trust())
}

/// `exp(s H)`. Hermitian `H` goes through the spectral decomposition; anything
/// else uses Pade scaling and squaring.
pub fn herm_exp(h: &TruncatedOperator, s: f64, tol: &Tolerances) -> Result<TruncatedOperator> {
    let m = if hermitian_defect(h.matrix()) <= tol.hermitian {
        let spec = HermitianSpectrum::new(h.matrix(), tol.hermitian)?;
        let top = (s * spec.max()).max(s * spec.min());
        if top > EXP_LIMIT {
            return Err(Error::Overflow { exponent: top });
        }
        spec.map(|x| (s * x).exp())
    } else {
        expm(&(h.matrix() * C64::new(s, 0.0)))?
    };
    TruncatedOperator::new(m, h.layout().clone(), h.trust())
}

/// General matrix exponential by degree-13 Pade approximation with scaling and squaring.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA_13: f64 = 5.371920351148152;

    let n = a.nrows();
    let norm1 = (0..n).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    if !norm1.is_finite() {
        return Err(Error::Overflow { exponent: norm1 });
    }
    if norm1 > EXP_LIMIT * 64.0 {
        return Err(Error::Overflow { exponent: norm1 });
    }
    let squarings = if norm1 > THETA_13 { (norm1 / THETA_13).log2().ceil() as i32 } else { 0 };
    let a = a * C64::new(2f64.powi(-squarings), 0.0);
    let id = CMatrix::identity(n, n);
    let c = |k: usize| C64::new(B[k], 0.0);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9)) + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &id * c(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8)) + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &id * c(0);
    let mut r = (&v - &u).lu().solve(&(&v + &u)).ok_or(Error::Singular)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Overflow { exponent: norm1 });
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::build_ladder;
    use proptest::prelude::*;

    /// Independent oracle: Taylor series on a scaled matrix, then repeated squaring.
    fn taylor_exp(a: &CMatrix, terms: usize) -> CMatrix {
        let norm = a.norm();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let a = a * C64::new(2f64.powi(-squarings), 0.0);
        let n = a.nrows();
        let mut sum = CMatrix::identity(n, n);
        let mut term = CMatrix::identity(n, n);
        for k in 1..terms {
            term = &term * &a * C64::new(1.0 / k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    fn position(dim: usize) -> TruncatedOperator {
        let c = build_ladder(dim).unwrap();
        &c + &c.adjoint()
    }

    #[test]
    fn spectral_exp_matches_taylor_oracle() {
        let tol = Tolerances::default();
        let x = position(16);
        let fast = herm_exp(&x, 1.0, &tol).unwrap();
        let oracle = taylor_exp(x.matrix(), 40);
        let rel = (fast.matrix() - &oracle).norm() / oracle.norm();
        assert!(rel < 1e-10, "relative difference {rel:e}");
    }

    #[test]
    fn pade_matches_taylor_for_non_normal_input() {
        let c = build_ladder(12).unwrap();
        let a = (c.matrix() * C64::new(0.7, 0.2)) + c.matrix().adjoint() * C64::new(-0.1, 0.4);
        let pade = expm(&a).unwrap();
        let oracle = taylor_exp(&a, 40);
        assert!((&pade - &oracle).norm() / oracle.norm() < 1e-12);
    }

    #[test]
    fn non_hermitian_input_takes_the_pade_path() {
        let tol = Tolerances::default();
        let c = build_ladder(8).unwrap();
        let e = herm_exp(&c, 1.0, &tol).unwrap();
        // exp(c) e_1 = e_1 + e_0 exactly, since c is nilpotent.
        assert!((e.matrix()[(0, 1)] - C64::new(1.0, 0.0)).norm() < 1e-13);
        assert!((e.matrix()[(1, 1)] - C64::new(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn sqrt_of_non_hermitian_is_rejected() {
        let c = build_ladder(4).unwrap();
        assert!(matches!(herm_sqrt(&c, &Tolerances::default()), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn sqrt_of_indefinite_is_rejected() {
        let x = position(4);
        assert!(matches!(herm_sqrt(&x, &Tolerances::default()), Err(Error::NotPositive { .. })));
    }

    #[test]
    fn overflow_is_reported() {
        let x = position(8);
        assert!(matches!(herm_exp(&x, 400.0, &Tolerances::default()), Err(Error::Overflow { .. })));
    }

    proptest! {
        #[test]
        fn sqrt_squares_back(entries in prop::collection::vec(-1.0f64..1.0, 2 * 36)) {
            let tol = Tolerances::default();
            let g = CMatrix::from_fn(6, 6, |i, j| C64::new(entries[6 * i + j], entries[36 + 6 * i + j]));
            let s = TruncatedOperator::from_matrix(&g * g.adjoint()).unwrap();
            let r = herm_sqrt(&s, &tol).unwrap();
            prop_assert!(r.hermitian_defect() < 1e-12);
            let back = r.matrix() * r.matrix();
            prop_assert!((back - s.matrix()).norm() <= 1e-10 * s.matrix().norm().max(1.0));
        }

        #[test]
        fn exp_of_opposite_scales_are_inverse(dim in 2usize..24, s in -1.5f64..1.5) {
            let tol = Tolerances::default();
            let x = position(dim);
            let plus = herm_exp(&x, s, &tol).unwrap();
            let minus = herm_exp(&x, -s, &tol).unwrap();
            let prod = plus.matrix() * minus.matrix();
            let cond = plus.matrix().norm() * minus.matrix().norm();
            let defect = (prod - CMatrix::identity(dim, dim)).norm();
            prop_assert!(defect <= 1e3 * f64::EPSILON * cond * dim as f64, "defect {defect:e}");
        }
    }
}
