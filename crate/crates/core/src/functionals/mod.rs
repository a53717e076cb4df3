//! Relative entropy, Fisher information, Stein kernels and discrepancies,
//! Wasserstein and total variation distances of 1D targets.

pub mod discrepancy;
pub mod information;
pub mod kernel;
pub mod transport;

use serde::{Deserialize, Serialize};

pub use discrepancy::{discrepancy_decomposition, stein_discrepancy, stein_discrepancy_product, Decomposition, NormKind};
pub use information::{fisher_information, relative_entropy, EPS_SCHEDULE, FISHER_DIVERGENCE};
pub use kernel::{stein_identity_residual, DENSITY_FLOOR, KERNEL_GRID, stein_kernel_1d, stein_kernel_pearson, KernelProvenance, SteinKernel};
pub use transport::{total_variation_1d, wasserstein_p_1d, wasserstein_p_between};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionalKind {
    H,
    I,
    S,
    #[serde(rename = "S_p")]
    Sp,
    #[serde(rename = "W_p")]
    Wp,
    TV,
}

/// A computed functional with its divergence flag and error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    pub kind: FunctionalKind,
    pub value: f64,
    pub diverged: bool,
    pub error_estimate: f64,
    /// Order p for S_p and W_p.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<f64>,
}

impl FunctionalValue {
    pub fn finite(kind: FunctionalKind, value: f64, error_estimate: f64) -> Self {
        FunctionalValue { kind, value: value.max(0.0), diverged: false, error_estimate, order: None }
    }

    pub fn divergent(kind: FunctionalKind) -> Self {
        FunctionalValue { kind, value: f64::INFINITY, diverged: true, error_estimate: f64::INFINITY, order: None }
    }

    pub fn with_order(mut self, p: f64) -> Self {
        self.order = Some(p);
        self
    }

    pub fn is_finite(&self) -> bool {
        !self.diverged && self.value.is_finite()
    }
}
