use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use super::{AdaptiveOptions, Interval};
use crate::error::{Error, Result};

/// Process-wide quadrature settings set once by a front end.
///
/// `tol` replaces the relative tolerance of the main integrals (the absolute
/// one becomes `tol / 100`), `truncation` cuts infinite ends at
/// `center ± truncation · scale`, and `nodes` sets the Gauss–Hermite rule
/// used by the Mehler formula.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SchemeOverrides {
    pub nodes: Option<usize>,
    pub tol: Option<f64>,
    pub truncation: Option<f64>,
}

static CURRENT: RwLock<SchemeOverrides> = RwLock::new(SchemeOverrides { nodes: None, tol: None, truncation: None });

pub fn overrides() -> SchemeOverrides {
    *CURRENT.read().unwrap_or_else(|e| e.into_inner())
}

pub fn set_overrides(o: SchemeOverrides) -> Result<()> {
    if o.nodes.is_some_and(|n| !(2..=512).contains(&n)) {
        return Err(Error::InvalidParameter("node count must be in 2..=512".into()));
    }
    if o.tol.is_some_and(|t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::InvalidParameter("tolerance must lie in (0, 1)".into()));
    }
    if o.truncation.is_some_and(|r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter("truncation radius must be positive".into()));
    }
    *CURRENT.write().unwrap_or_else(|e| e.into_inner()) = o;
    Ok(())
}

impl SchemeOverrides {
    pub fn adapt(&self, mut opts: AdaptiveOptions) -> AdaptiveOptions {
        if let Some(t) = self.tol {
            opts.rel_tol = t;
            opts.abs_tol = t * 1e-2;
        }
        opts
    }

    pub fn truncate(&self, mut iv: Interval) -> Interval {
        let Some(r) = self.truncation else { return iv };
        if !iv.lo.is_finite() {
            iv.lo = iv.center - r * iv.scale;
        }
        if !iv.hi.is_finite() {
            iv.hi = iv.center + r * iv.scale;
        }
        let (lo, hi) = (iv.lo, iv.hi);
        iv.breakpoints.retain(|&b| b > lo && b < hi);
        iv.center = 0.5 * (lo + hi);
        iv
    }
}
