//! Coherent states built from the biorthogonal families, and quadrature of the
//! resolutions of the identity they induce.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{submatrix, CMatrix, CVector, FockBasisIndex, C64};
use crate::pbsystem::{BiorthogonalSystem, PseudoBosonPair};
use crate::tolerance::Tolerances;

/// Series coherent states `phi(z)`, `Psi(z)` truncated at `series_cutoff` per mode.
#[derive(Debug, Clone)]
pub struct CoherentState {
    pub z: Vec<C64>,
    pub vec_phi: CVector,
    pub vec_psi: CVector,
    pub series_cutoff: usize,
    /// Estimated norm of the dropped tail relative to the state norm.
    pub tail_bound: f64,
}

/// `exp(-|z|^2 / 2) prod_j z_j^{n_j} / sqrt(n_j!)` for every index of `system`.
pub fn coefficients(indices: &[FockBasisIndex], z: &[C64]) -> Vec<C64> {
    let n_max = indices.iter().map(|i| i.max_component()).max().unwrap_or(0);
    let per_mode: Vec<Vec<C64>> = z.iter().map(|&zj| single_mode_coefficients(zj, n_max)).collect();
    indices
        .iter()
        .map(|idx| idx.0.iter().zip(&per_mode).map(|(&n, c)| c[n]).product())
        .collect()
}

fn single_mode_coefficients(z: C64, n_max: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut c = C64::new((-z.norm_sqr() / 2.0).exp(), 0.0);
    out.push(c);
    for n in 1..=n_max {
        c = c * z / (n as f64).sqrt();
        out.push(c);
    }
    out
}

/// Tail growth model of one mode: `||v_n|| <= peak * growth^(n - n_max)` beyond `n_max`.
#[derive(Debug, Clone, Copy)]
struct TailModel {
    n_max: usize,
    peak: f64,
    growth: f64,
}

impl TailModel {
    fn from_norms(norms: &[f64]) -> Self {
        let n_max = norms.len() - 1;
        let window = n_max.min(8);
        let peak = norms[n_max - window..].iter().copied().fold(0.0, f64::max);
        let growth = if window == 0 {
            1.0
        } else {
            (norms[n_max] / norms[n_max - window]).powf(1.0 / window as f64).max(1.0)
        };
        Self { n_max, peak, growth }
    }

    /// `exp(-r^2/2) sum_{n > n_max} r^n / sqrt(n!) * peak * growth^(n - n_max)`.
    fn tail(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let (lr, lg) = (r.ln(), self.growth.ln());
        let mut log_fact = (1..=self.n_max).map(|k| (k as f64).ln()).sum::<f64>();
        let mut sum = 0.0;
        let mut n = self.n_max;
        loop {
            n += 1;
            log_fact += (n as f64).ln();
            let log_term = -r * r / 2.0 + n as f64 * lr + (n - self.n_max) as f64 * lg - 0.5 * log_fact;
            let term = log_term.exp() * self.peak;
            sum += term;
            let shrinking = lr + lg < 0.5 * (n as f64).ln();
            if shrinking && term <= 1e-20 * sum.max(f64::MIN_POSITIVE) || n > self.n_max + 100_000 {
                break;
            }
        }
        sum
    }

    /// Partial sum of the same bound over `n <= n_max` with the actual norms.
    fn head(norms: &[f64], r: f64) -> f64 {
        let coeffs = single_mode_coefficients(C64::new(r, 0.0), norms.len() - 1);
        coeffs.iter().zip(norms).map(|(c, v)| c.norm() * v).sum()
    }
}

/// Norms of `phi_{n e_j}` and `Psi_{n e_j}` along the axis of `mode`.
fn axis_norms(system: &BiorthogonalSystem, mode: usize) -> (Vec<f64>, Vec<f64>) {
    let modes = system.layout().modes();
    let mut phi = Vec::with_capacity(system.n_max() + 1);
    let mut psi = Vec::with_capacity(system.n_max() + 1);
    for n in 0..=system.n_max() {
        let mut idx = vec![0; modes];
        idx[mode] = n;
        let k = system.position(&FockBasisIndex(idx)).expect("axis index is inside the generated box");
        phi.push(system.phi()[k].norm());
        psi.push(system.psi()[k].norm());
    }
    (phi, psi)
}

/// Absolute tail bounds `(phi, psi)` of the series at amplitudes `|z_j| = radii[j]`.
///
/// Several modes are combined with a union bound: the tail of mode `j` times the
/// full bound of every other mode.
fn tail_bounds(system: &BiorthogonalSystem, radii: &[f64]) -> (f64, f64) {
    let mut out = (0.0, 0.0);
    let models: Vec<_> = (0..radii.len())
        .map(|j| {
            let (p, q) = axis_norms(system, j);
            (TailModel::from_norms(&p), TailModel::from_norms(&q), p, q)
        })
        .collect();
    for (j, &rj) in radii.iter().enumerate() {
        let (mut tp, mut tq) = (models[j].0.tail(rj), models[j].1.tail(rj));
        for (k, &rk) in radii.iter().enumerate() {
            if k != j {
                let (mp, mq, p, q) = &models[k];
                tp *= TailModel::head(p, rk) + mp.tail(rk);
                tq *= TailModel::head(q, rk) + mq.tail(rk);
            }
        }
        out.0 += tp;
        out.1 += tq;
    }
    out
}

/// Build `phi(z)` and `Psi(z)` from the generated families.
pub fn coherent_build(system: &BiorthogonalSystem, z: &[C64], tol: &Tolerances) -> Result<CoherentState> {
    if z.len() != system.layout().modes() {
        return Err(Error::Shape(format!("{} amplitudes for {} modes", z.len(), system.layout().modes())));
    }
    let coeffs = coefficients(system.indices(), z);
    let dim = system.layout().total();
    let mut vec_phi = CVector::zeros(dim);
    let mut vec_psi = CVector::zeros(dim);
    for ((c, p), q) in coeffs.iter().zip(system.phi()).zip(system.psi()) {
        vec_phi.axpy(*c, p, C64::new(1.0, 0.0));
        vec_psi.axpy(*c, q, C64::new(1.0, 0.0));
    }
    let radii: Vec<f64> = z.iter().map(|x| x.norm()).collect();
    let (tp, tq) = tail_bounds(system, &radii);
    let tail_bound = (tp / vec_phi.norm()).max(tq / vec_psi.norm());
    if !(tail_bound < tol.tail) {
        return Err(Error::DomainExceeded {
            radius: radii.iter().copied().fold(0.0, f64::max),
            tail: tail_bound,
            tolerance: tol.tail,
        });
    }
    Ok(CoherentState { z: z.to_vec(), vec_phi, vec_psi, series_cutoff: system.n_max(), tail_bound })
}

/// Relative residuals of `a_j phi(z) = z_j phi(z)` and `b_j^dagger Psi(z) = z_j Psi(z)` per mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenRelation {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl EigenRelation {
    pub fn max(&self) -> f64 {
        self.phi.iter().chain(&self.psi).copied().fold(0.0, f64::max)
    }
}

pub fn eigen_relation_check(state: &CoherentState, pair: &PseudoBosonPair) -> EigenRelation {
    let mut phi = Vec::with_capacity(pair.modes());
    let mut psi = Vec::with_capacity(pair.modes());
    for (j, &zj) in state.z.iter().enumerate() {
        let rp = pair.a()[j].apply(&state.vec_phi) - &state.vec_phi * zj;
        let rq = pair.b()[j].matrix().adjoint() * &state.vec_psi - &state.vec_psi * zj;
        phi.push(rp.norm() / state.vec_phi.norm());
        psi.push(rq.norm() / state.vec_psi.norm());
    }
    EigenRelation { phi, psi }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub r_max: f64,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// Trust region of the reported defects.
    pub trust: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { r_max: 6.0, radial_nodes: 64, angular_nodes: 64, trust: 12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureDefects {
    /// Relative defect of the `|phi(z)><phi(z)|` integral against `S_phi`.
    pub s_phi: f64,
    /// Relative defect of the `|Psi(z)><Psi(z)|` integral against `S_psi`.
    pub s_psi: f64,
    /// Absolute defect of the `|phi(z)><Psi(z)|` integral against the identity.
    pub identity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceStep {
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    pub defects: QuadratureDefects,
}

/// Angular means of the integrand norms at one radius (mode 0, other modes at zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub radius: f64,
    pub phi: f64,
    pub psi: f64,
    pub mixed: f64,
    pub faithful: bool,
}

#[derive(Debug, Clone)]
pub struct QuadratureReport {
    pub spec: QuadratureSpec,
    pub s_phi: CMatrix,
    pub s_psi: CMatrix,
    pub identity: CMatrix,
    pub defects: QuadratureDefects,
    pub trace: Vec<ConvergenceStep>,
    /// Largest relative change of the three integrals under node doubling.
    pub change: f64,
    pub profile: Vec<ProfileSample>,
    /// Largest radial node at which the truncated series is faithful.
    pub faithful_radius: f64,
    /// Largest growth of an integrand norm over the outer half of the faithful domain.
    pub growth: f64,
}

impl QuadratureReport {
    /// Error if node doubling moved the integrals, or an integrand norm grows
    /// steadily with the radius.
    pub fn verdict(&self, tol: &Tolerances) -> Result<()> {
        if !(self.change <= tol.quadrature) {
            return Err(Error::QuadratureNotConverged { change: self.change, tolerance: tol.quadrature });
        }
        if self.growth > tol.rho_grow {
            return Err(Error::IntegrandDivergence { growth: self.growth, radius: self.faithful_radius });
        }
        Ok(())
    }
}

/// Per-mode moment matrix `W_nm = (1/pi) sum_nodes w e^{-r^2} z^n conj(z)^m / sqrt(n! m!)`.
fn moments(n_max: usize, r_max: f64, radial: usize, angular: usize) -> CMatrix {
    let (x, w) = gauss_legendre(radial);
    let mut m = CMatrix::zeros(n_max + 1, n_max + 1);
    let dtheta = 2.0 * std::f64::consts::PI / angular as f64;
    for (xk, wk) in x.iter().zip(&w) {
        let r = 0.5 * r_max * (xk + 1.0);
        let weight = 0.5 * r_max * wk * r * dtheta / std::f64::consts::PI;
        for l in 0..angular {
            let z = C64::from_polar(r, l as f64 * dtheta);
            let c = CVector::from_vec(single_mode_coefficients(z, n_max));
            m.ger(C64::new(weight, 0.0), &c, &c.conjugate(), C64::new(1.0, 0.0));
        }
    }
    m
}

fn integrals(system: &BiorthogonalSystem, spec: &QuadratureSpec, radial: usize, angular: usize) -> (CMatrix, CMatrix, CMatrix) {
    let single = moments(system.n_max(), spec.r_max, radial, angular);
    let mut w = CMatrix::identity(1, 1);
    for _ in 0..system.layout().modes() {
        w = w.kronecker(&single);
    }
    let rows = system.layout().trust_indices(spec.trust);
    let cols: Vec<usize> = (0..system.len()).collect();
    let phi = submatrix(&system.phi_matrix(), &rows, &cols);
    let psi = submatrix(&system.psi_matrix(), &rows, &cols);
    let pw = &phi * &w;
    let qw = &psi * &w;
    (&pw * phi.adjoint(), &qw * psi.adjoint(), &pw * psi.adjoint())
}

/// Integrate `|phi(z)><phi(z)|`, `|Psi(z)><Psi(z)|` and `|phi(z)><Psi(z)|` over
/// `|z_j| <= r_max` per mode and compare with `S_phi`, `S_psi` and the identity on
/// the trust region. The node counts are doubled once to measure convergence.
pub fn identity_resolution_quadrature(
    system: &BiorthogonalSystem,
    spec: &QuadratureSpec,
    tol: &Tolerances,
) -> Result<QuadratureReport> {
    let layout = system.layout();
    if layout.modes() > 2 {
        return Err(Error::Shape(format!("quadrature supports at most 2 modes, got {}", layout.modes())));
    }
    layout.check_trust(spec.trust)?;
    if spec.radial_nodes == 0 || spec.angular_nodes == 0 || !(spec.r_max > 0.0) {
        return Err(Error::Shape("quadrature needs positive node counts and radius".into()));
    }
    let rows = layout.trust_indices(spec.trust);
    let cols: Vec<usize> = (0..system.len()).collect();
    let phi_t = submatrix(&system.phi_matrix(), &rows, &cols);
    let psi_t = submatrix(&system.psi_matrix(), &rows, &cols);
    let ref_phi = &phi_t * phi_t.adjoint();
    let ref_psi = &psi_t * psi_t.adjoint();
    let id = CMatrix::identity(rows.len(), rows.len());
    let defects = |(sp, sq, mix): &(CMatrix, CMatrix, CMatrix)| QuadratureDefects {
        s_phi: (sp - &ref_phi).norm() / ref_phi.norm(),
        s_psi: (sq - &ref_psi).norm() / ref_psi.norm(),
        identity: (mix - &id).norm(),
    };

    let base = integrals(system, spec, spec.radial_nodes, spec.angular_nodes);
    let fine = integrals(system, spec, 2 * spec.radial_nodes, 2 * spec.angular_nodes);
    let change = ((&fine.0 - &base.0).norm() / ref_phi.norm())
        .max((&fine.1 - &base.1).norm() / ref_psi.norm())
        .max((&fine.2 - &base.2).norm());
    let trace = vec![
        ConvergenceStep { radial_nodes: spec.radial_nodes, angular_nodes: spec.angular_nodes, defects: defects(&base) },
        ConvergenceStep {
            radial_nodes: 2 * spec.radial_nodes,
            angular_nodes: 2 * spec.angular_nodes,
            defects: defects(&fine),
        },
    ];

    let (profile, faithful_radius, growth) = integrand_profile(system, spec, tol);
    let (s_phi, s_psi, identity) = base;
    Ok(QuadratureReport {
        spec: *spec,
        s_phi,
        s_psi,
        identity,
        defects: trace[0].defects,
        trace,
        change,
        profile,
        faithful_radius,
        growth,
    })
}

fn integrand_profile(system: &BiorthogonalSystem, spec: &QuadratureSpec, tol: &Tolerances) -> (Vec<ProfileSample>, f64, f64) {
    let modes = system.layout().modes();
    let (x, _) = gauss_legendre(spec.radial_nodes);
    let phi = system.phi_matrix();
    let psi = system.psi_matrix();
    let dtheta = 2.0 * std::f64::consts::PI / spec.angular_nodes as f64;
    let mut profile = Vec::with_capacity(x.len());
    for xk in &x {
        let r = 0.5 * spec.r_max * (xk + 1.0);
        let (mut hp, mut hq, mut hm) = (0.0, 0.0, 0.0);
        for l in 0..spec.angular_nodes {
            let mut z = vec![C64::new(0.0, 0.0); modes];
            z[0] = C64::from_polar(r, l as f64 * dtheta);
            let c = CVector::from_vec(coefficients(system.indices(), &z));
            let (np, nq) = ((&phi * &c).norm(), (&psi * &c).norm());
            hp += np * np;
            hq += nq * nq;
            hm += np * nq;
        }
        let m = spec.angular_nodes as f64;
        let mut radii = vec![0.0; modes];
        radii[0] = r;
        let (tp, tq) = tail_bounds(system, &radii);
        let faithful = tp <= tol.tail * (hp / m).sqrt() && tq <= tol.tail * (hq / m).sqrt();
        profile.push(ProfileSample { radius: r, phi: hp / m, psi: hq / m, mixed: hm / m, faithful });
    }
    let inside: Vec<&ProfileSample> = profile.iter().take_while(|p| p.faithful).collect();
    let faithful_radius = inside.last().map_or(0.0, |p| p.radius);
    let outer: Vec<&ProfileSample> = inside.iter().copied().filter(|p| p.radius >= 0.5 * faithful_radius).collect();
    let mut growth: f64 = 1.0;
    if outer.len() >= 2 {
        for pick in [|p: &ProfileSample| p.phi, |p: &ProfileSample| p.psi, |p: &ProfileSample| p.mixed] {
            let vals: Vec<f64> = outer.iter().map(|p| pick(p)).collect();
            if vals.windows(2).all(|w| w[1] >= w[0]) {
                growth = growth.max(vals[vals.len() - 1] / vals[0]);
            }
        }
    }
    (profile, faithful_radius, growth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::build_ladder;
    use crate::pbsystem::build_system;
    use proptest::prelude::*;

    fn standard(dim: usize, n_max: usize) -> (PseudoBosonPair, BiorthogonalSystem) {
        let c = build_ladder(dim).unwrap();
        let pair = PseudoBosonPair::single(c.clone(), c.adjoint()).unwrap();
        let sys = build_system(&pair, n_max, &Tolerances::default()).unwrap();
        (pair, sys)
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let m18: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((m18 - 2.0 / 19.0).abs() < 1e-14);
        let (x1, w1) = gauss_legendre(1);
        assert!(x1[0].abs() < 1e-16 && (w1[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_amplitude_gives_vacua() {
        let (_, sys) = standard(16, 7);
        let s = coherent_build(&sys, &[C64::new(0.0, 0.0)], &Tolerances::default()).unwrap();
        assert!((&s.vec_phi - &sys.phi()[0]).norm() < 1e-15);
        assert!((&s.vec_psi - &sys.psi()[0]).norm() < 1e-15);
        assert_eq!(s.tail_bound, 0.0);
    }

    #[test]
    fn textbook_coherent_state() {
        let (_, sys) = standard(64, 40);
        let s = coherent_build(&sys, &[C64::new(1.0, 0.0)], &Tolerances::default()).unwrap();
        let mut fact = 1.0;
        for n in 0..20 {
            if n > 0 {
                fact *= n as f64;
            }
            let want = (-0.5f64).exp() / fact.sqrt();
            assert!((s.vec_phi[n].re - want).abs() < 1e-15);
        }
    }

    #[test]
    fn standard_eigen_relation() {
        let (pair, sys) = standard(64, 31);
        let s = coherent_build(&sys, &[C64::new(0.7, 0.2)], &Tolerances::default()).unwrap();
        let r = eigen_relation_check(&s, &pair);
        assert!(r.max() < 1e-9, "{:e}", r.max());
    }

    #[test]
    fn amplitude_beyond_the_series_is_rejected() {
        let (_, sys) = standard(16, 7);
        let err = coherent_build(&sys, &[C64::new(3.0, 0.0)], &Tolerances::default()).unwrap_err();
        assert!(matches!(err, Error::DomainExceeded { .. }));
    }

    #[test]
    fn two_mode_state_factorizes() {
        let tol = Tolerances::default();
        let layout = crate::fock::ModeLayout::uniform(8, 2).unwrap();
        let c = crate::fock::mode_ladders(&layout).unwrap();
        let pair = PseudoBosonPair::new(c.clone(), c.iter().map(|x| x.adjoint()).collect()).unwrap();
        let sys2 = build_system(&pair, 6, &tol).unwrap();
        let (_, sys1) = standard(8, 6);
        let (z1, z2) = (C64::new(0.1, 0.05), C64::new(-0.08, 0.02));
        let s2 = coherent_build(&sys2, &[z1, z2], &tol).unwrap();
        let a = coherent_build(&sys1, &[z1], &tol).unwrap();
        let b = coherent_build(&sys1, &[z2], &tol).unwrap();
        let kron = a.vec_phi.kronecker(&b.vec_phi);
        assert!((&s2.vec_phi - kron).norm() < 1e-15);
    }

    #[test]
    fn standard_quadrature_matches_incomplete_gamma() {
        // Oracle: the radial integral of e^{-r^2} r^{2n+1} over [0, R] is
        // (n!/2) P(n+1, R^2), so the identity defect on the first t levels is
        // sqrt(sum_n Q(n+1, R^2)^2) with Q(n+1, x) = e^{-x} sum_{k<=n} x^k/k!.
        let tol = Tolerances::default();
        let (_, sys) = standard(32, 19);
        let spec = QuadratureSpec { trust: 12, ..QuadratureSpec::default() };
        let q = identity_resolution_quadrature(&sys, &spec, &tol).unwrap();
        let x: f64 = 36.0;
        let mut term = (-x).exp();
        let mut cdf = 0.0;
        let mut sq = 0.0;
        for n in 0..12 {
            if n > 0 {
                term *= x / n as f64;
            }
            cdf += term;
            sq += cdf * cdf;
        }
        assert!((q.defects.identity - sq.sqrt()).abs() < 1e-12, "{:e} vs {:e}", q.defects.identity, sq.sqrt());
        assert!(q.defects.s_phi < 1e-6 && q.defects.s_psi < 1e-6);
        assert!(q.change < 1e-12);
        q.verdict(&tol).unwrap();
    }

    proptest! {
        #[test]
        fn rotation_keeps_coefficient_moduli(r in 0.0f64..2.0, a in 0.0f64..6.3, t in 0.0f64..6.3) {
            let idx: Vec<FockBasisIndex> = (0..12).map(|n| FockBasisIndex(vec![n])).collect();
            let z = C64::from_polar(r, a);
            let c1 = coefficients(&idx, &[z]);
            let c2 = coefficients(&idx, &[z * C64::from_polar(1.0, t)]);
            for (x, y) in c1.iter().zip(&c2) {
                prop_assert!((x.norm() - y.norm()).abs() <= 1e-14 * x.norm().max(1e-300));
            }
        }

        #[test]
        fn self_dual_states_coincide(re in -0.8f64..0.8, im in -0.8f64..0.8) {
            let (_, sys) = standard(40, 25);
            let s = coherent_build(&sys, &[C64::new(re, im)], &Tolerances::default()).unwrap();
            prop_assert!((&s.vec_phi - &s.vec_psi).norm() < 1e-15);
        }
    }
}
