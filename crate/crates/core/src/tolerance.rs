//! Numerical tolerance policy.
//!
//! Structural checks (Hermiticity, kernels, positivity) scale with
//! `kappa * dim * eps * norm`; acceptance-style thresholds are plain numbers.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Safety factor in the scaled structural tolerances.
    pub kappa: f64,
    /// Relative Hermiticity defect accepted before a matrix is rejected.
    pub hermitian: f64,
    /// Gram-matrix deviation from the identity.
    pub biorthogonality: f64,
    /// Relative residual of `N phi_n = n phi_n` and its adjoint partner.
    pub eigen: f64,
    /// Commutator defect on the trust region.
    pub commutator: f64,
    /// Completeness defect of the pseudo-inverse reconstruction.
    pub completeness: f64,
    /// Relative coherent-series tail that still counts as faithful.
    pub tail: f64,
    /// Allowed defect change under node doubling.
    pub quadrature: f64,
    /// Identity-resolution defect of the coherent-state quadrature.
    pub resolution: f64,
    /// Relative disagreement between an explicit metric and the frame operator.
    pub metric: f64,
    /// Largest fraction of a vacuum's norm allowed in the top quarter of a mode
    /// when the kernel is found only after trimming the truncation edge.
    pub vacuum_edge: f64,
    /// Condition numbers above this are treated as numerically meaningless.
    pub max_condition: f64,
    /// Plateau ratio for regular frames.
    pub rho_flat: f64,
    /// Growth ratio for non-regular frames.
    pub rho_grow: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            kappa: 100.0,
            hermitian: 1e-10,
            biorthogonality: 1e-8,
            eigen: 1e-8,
            commutator: 1e-10,
            completeness: 1e-6,
            tail: 1e-8,
            quadrature: 1e-8,
            resolution: 1e-5,
            metric: 1e-5,
            vacuum_edge: 1e-2,
            max_condition: 1e10,
            rho_flat: 1.5,
            rho_grow: 4.0,
        }
    }
}

impl Tolerances {
    /// `kappa * dim * eps * norm`, the floor below which values count as rounding noise.
    pub fn scaled(&self, dim: usize, norm: f64) -> f64 {
        self.kappa * dim as f64 * f64::EPSILON * norm
    }

    /// Positivity floor for a Hermitian matrix whose largest eigenvalue is `norm`.
    pub fn positivity(&self, dim: usize, norm: f64) -> f64 {
        dim as f64 * f64::EPSILON * norm
    }

    /// Set a field by its name; used by config overrides.
    pub fn set(&mut self, key: &str, value: f64) -> bool {
        let slot = match key {
            "kappa" => &mut self.kappa,
            "hermitian" => &mut self.hermitian,
            "biorthogonality" => &mut self.biorthogonality,
            "eigen" => &mut self.eigen,
            "commutator" => &mut self.commutator,
            "completeness" => &mut self.completeness,
            "tail" => &mut self.tail,
            "quadrature" => &mut self.quadrature,
            "resolution" => &mut self.resolution,
            "metric" => &mut self.metric,
            "vacuum_edge" => &mut self.vacuum_edge,
            "max_condition" => &mut self.max_condition,
            "rho_flat" => &mut self.rho_flat,
            "rho_grow" => &mut self.rho_grow,
            _ => return false,
        };
        *slot = value;
        true
    }
}
