//! Deterministic 1D integration, a tensor rule for d ≤ 3 and quantile
//! inversion.
//!
//! The default scheme is adaptive Gauss–Kronrod on the mapped domain, so
//! infinite intervals need no truncation. Fixed Gauss rules are available
//! for Gaussian- and gamma-weighted expectations.

pub mod adaptive;
pub mod quantile;
pub mod rules;
mod settings;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use adaptive::{integrate_vec, AdaptiveOptions, Interval, VecEstimate};
pub use quantile::{quantile, quantile_on, upper_quantile_on};
pub use rules::{default_hermite, gauss_hermite, gauss_laguerre, gauss_legendre, GaussRule};
pub use settings::{overrides, set_overrides, SchemeOverrides};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    GaussHermite,
    GaussLaguerre,
    GaussLegendreComposite,
    Adaptive,
}

/// How an integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrationScheme {
    pub kind: SchemeKind,
    /// Nodes of the fixed rule (per panel for the composite rule).
    pub nodes: usize,
    /// Composite panels.
    pub panels: usize,
    /// Optional truncation of infinite ends at `center ± truncation·scale`.
    pub truncation: Option<f64>,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for IntegrationScheme {
    /// Built-in settings, adjusted by any [`SchemeOverrides`] in force.
    fn default() -> Self {
        let o = overrides();
        IntegrationScheme {
            kind: SchemeKind::Adaptive,
            nodes: o.nodes.unwrap_or(128),
            panels: 64,
            truncation: o.truncation,
            abs_tol: o.tol.map_or(1e-13, |t| t * 1e-2),
            rel_tol: o.tol.unwrap_or(1e-11),
            max_segments: 4000,
        }
    }
}

impl IntegrationScheme {
    pub fn adaptive() -> Self {
        Self::default()
    }

    pub fn gauss_hermite(nodes: usize) -> Self {
        IntegrationScheme { kind: SchemeKind::GaussHermite, nodes, ..Self::default() }
    }

    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::InvalidParameter("node count must be at least 2".into()));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if let Some(r) = self.truncation {
            if !(r > 0.0) {
                return Err(Error::InvalidParameter("truncation radius must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn adaptive_options(&self) -> AdaptiveOptions {
        AdaptiveOptions {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_segments: self.max_segments,
            ..AdaptiveOptions::default()
        }
    }

    fn truncated(&self, iv: &Interval) -> Interval {
        let Some(r) = self.truncation else { return iv.clone() };
        let mut out = iv.clone();
        if !iv.lo.is_finite() {
            out.lo = iv.center - r * iv.scale;
        }
        if !iv.hi.is_finite() {
            out.hi = iv.center + r * iv.scale;
        }
        if !iv.lo.is_finite() || !iv.hi.is_finite() {
            out.center = 0.5 * (out.lo + out.hi);
        }
        out
    }
}

/// An integral value with its a-posteriori error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

impl Estimate {
    /// Value if converged, else [`Error::NoConvergence`].
    pub fn checked(self) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NoConvergence { estimate: self.value, error: self.error })
        }
    }
}

/// ∫ f(x) dx over `iv` with the given scheme.
///
/// For the Gauss–Hermite and Gauss–Laguerre kinds the integrand is divided
/// by the rule's weight, so they suit integrands with Gaussian (resp.
/// exponential) tails only.
pub fn integrate<F: Fn(f64) -> f64>(f: F, iv: &Interval, scheme: &IntegrationScheme) -> Result<Estimate> {
    scheme.validate()?;
    match scheme.kind {
        SchemeKind::Adaptive => {
            let iv = scheme.truncated(iv);
            let r = integrate_vec(|x| [f(x)], &iv, &scheme.adaptive_options())?;
            Ok(Estimate { value: r.value[0], error: r.error[0], converged: r.converged })
        }
        SchemeKind::GaussLegendreComposite => {
            let iv = scheme.truncated(iv);
            if !iv.is_finite() {
                return Err(Error::InvalidParameter(
                    "composite Gauss–Legendre needs a finite or truncated interval".into(),
                ));
            }
            let rule = gauss_legendre(scheme.nodes);
            let full = composite(&f, &rule, iv.lo, iv.hi, scheme.panels.max(2))?;
            let half = composite(&f, &rule, iv.lo, iv.hi, (scheme.panels / 2).max(1))?;
            let error = (full - half).abs();
            let converged = error <= scheme.abs_tol.max(scheme.rel_tol * full.abs());
            Ok(Estimate { value: full, error, converged })
        }
        SchemeKind::GaussHermite => {
            if iv.lo.is_finite() || iv.hi.is_finite() {
                return Err(Error::InvalidParameter("Gauss–Hermite integrates over the real line".into()));
            }
            let (c, s) = (iv.center, iv.scale);
            let g = |z: f64| f(c + s * z) * s / std_normal_pdf(z);
            let full = gauss_hermite(scheme.nodes).apply(g);
            let half = gauss_hermite((scheme.nodes / 2).max(2)).apply(g);
            finish(full, half, scheme)
        }
        SchemeKind::GaussLaguerre => {
            if !iv.lo.is_finite() || iv.hi.is_finite() {
                return Err(Error::InvalidParameter("Gauss–Laguerre integrates over [a, ∞)".into()));
            }
            let (a, s) = (iv.lo, iv.scale);
            let g = |y: f64| f(a + s * y) * s * y.exp();
            let full = gauss_laguerre(scheme.nodes, 1.0).apply(g);
            let half = gauss_laguerre((scheme.nodes / 2).max(2), 1.0).apply(g);
            finish(full, half, scheme)
        }
    }
}

fn finish(full: f64, half: f64, scheme: &IntegrationScheme) -> Result<Estimate> {
    if !full.is_finite() {
        return Err(Error::NonFinite { x: f64::NAN });
    }
    let error = (full - half).abs();
    let converged = error <= scheme.abs_tol.max(scheme.rel_tol * full.abs()).max(1e-9 * full.abs());
    Ok(Estimate { value: full, error, converged })
}

fn composite<F: Fn(f64) -> f64>(f: &F, rule: &GaussRule, a: f64, b: f64, panels: usize) -> Result<f64> {
    let h = (b - a) / panels as f64;
    let mut parts = Vec::with_capacity(panels);
    for p in 0..panels {
        let lo = a + h * p as f64;
        let c = lo + 0.5 * h;
        let v = 0.5 * h * rule.apply(|t| f(c + 0.5 * h * t));
        if !v.is_finite() {
            return Err(Error::NonFinite { x: c });
        }
        parts.push(v);
    }
    Ok(crate::parallel::pairwise_sum(&parts))
}

#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// E f(Z) for Z standard normal. Gauss–Hermite when the scheme asks for it,
/// otherwise adaptive integration of `f·φ` over the real line.
pub fn gaussian_expectation<F: Fn(f64) -> f64>(f: F, scheme: &IntegrationScheme) -> Result<Estimate> {
    match scheme.kind {
        SchemeKind::GaussHermite => {
            scheme.validate()?;
            let full = if scheme.nodes == default_hermite().len() { default_hermite().apply(&f) } else { gauss_hermite(scheme.nodes).apply(&f) };
            let half = gauss_hermite((scheme.nodes / 2).max(2)).apply(&f);
            finish(full, half, scheme)
        }
        _ => integrate(|x| f(x) * std_normal_pdf(x), &Interval::real_line(), scheme),
    }
}

/// Iterated integral over a box of dimension 1 to 3 (tensor product of the
/// 1D scheme).
pub fn integrate_product<F>(f: F, ivs: &[Interval], scheme: &IntegrationScheme) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64,
{
    if ivs.is_empty() || ivs.len() > 3 {
        return Err(Error::Dimension(format!("tensor rule supports 1 ≤ d ≤ 3, got {}", ivs.len())));
    }
    let mut point = vec![0.0; ivs.len()];
    nested(&f, ivs, scheme, 0, &mut point)
}

fn nested<F: Fn(&[f64]) -> f64>(
    f: &F,
    ivs: &[Interval],
    scheme: &IntegrationScheme,
    level: usize,
    point: &mut [f64],
) -> Result<Estimate> {
    let cell = std::cell::RefCell::new(point.to_vec());
    let failure = std::cell::Cell::new(None::<Error>);
    let converged = std::cell::Cell::new(true);
    let est = integrate(
        |x| {
            let mut p = cell.borrow_mut();
            p[level] = x;
            if level + 1 == ivs.len() {
                f(&p)
            } else {
                let mut inner_point = p.clone();
                drop(p);
                match nested(f, ivs, scheme, level + 1, &mut inner_point) {
                    Ok(e) => {
                        if !e.converged {
                            converged.set(false);
                        }
                        e.value
                    }
                    Err(e) => {
                        failure.set(Some(e));
                        0.0
                    }
                }
            }
        },
        &ivs[level],
        scheme,
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(Estimate { converged: est.converged && converged.get(), ..est })
}
