use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngExt};
use rand_distr::{Distribution, Gamma, StandardNormal, StudentT};
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::gamma::ln_gamma;

use super::pearson::PearsonParams;
use super::poly::Poly1;
use super::reference::Reference1D;
use super::special::*;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_vec, quantile_on, upper_quantile_on, AdaptiveOptions, IntegrationScheme, Interval};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Closed-form data of a target family.
#[derive(Clone)]
pub enum Family {
    /// N(0, var).
    Normal { var: f64 },
    /// G - p with G ~ Gamma(p, 1), on (-p, ∞).
    ShiftedGamma { p: f64, ln_gamma_p: f64 },
    /// Uniform on [-c, c].
    Uniform { c: f64 },
    /// (1 - a) φ(x) + a n φ(n x).
    Mixture { n: f64, a: f64 },
    /// ∝ (1 + x²)^{-α}.
    StudentLike { alpha: f64, log_z: f64 },
    /// The reference measure itself.
    Reference,
    /// ρ_ref · P / Z for a polynomial P > 0 on the support.
    Tilt { poly: Poly1, dpoly: Poly1, log_z: f64 },
    /// Numerically normalized density, possibly shifted to mean zero.
    Numeric(Numeric),
}

#[derive(Clone)]
pub struct Numeric {
    pub log_f: ScalarFn,
    pub dlog_f: Option<ScalarFn>,
    /// Target coordinate x corresponds to x + shift in the coordinates of `log_f`.
    pub shift: f64,
    pub log_z: f64,
    pub pearson: Option<PearsonParams>,
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Normal { var } => write!(f, "Normal {{ var: {var} }}"),
            Family::ShiftedGamma { p, .. } => write!(f, "ShiftedGamma {{ p: {p} }}"),
            Family::Uniform { c } => write!(f, "Uniform {{ c: {c} }}"),
            Family::Mixture { n, a } => write!(f, "Mixture {{ n: {n}, a: {a} }}"),
            Family::StudentLike { alpha, .. } => write!(f, "StudentLike {{ alpha: {alpha} }}"),
            Family::Reference => write!(f, "Reference"),
            Family::Tilt { poly, .. } => write!(f, "Tilt {{ poly: {:?} }}", poly.0),
            Family::Numeric(n) => write!(f, "Numeric {{ shift: {}, pearson: {:?} }}", n.shift, n.pearson),
        }
    }
}

/// Cumulative masses on a grid that is uniform in the mapped variable of the
/// integration domain, so heavy tails get geometrically spaced panels.
#[derive(Debug, Clone)]
struct CdfTable {
    xs: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

const CDF_PANELS: usize = 512;

/// A one-dimensional probability density ν with respect to Lebesgue
/// measure, attached to a reference measure μ (so that dν = h dμ).
#[derive(Clone)]
pub struct TargetDensity {
    tag: String,
    family: Family,
    reference: Reference1D,
    lo: f64,
    hi: f64,
    breakpoints: Vec<f64>,
    scale: f64,
    center: f64,
    cdf_table: Option<Arc<CdfTable>>,
}

impl fmt::Debug for TargetDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetDensity")
            .field("tag", &self.tag)
            .field("family", &self.family)
            .field("reference", &self.reference.name())
            .field("support", &(self.lo, self.hi))
            .finish()
    }
}

fn default_opts() -> IntegrationScheme {
    IntegrationScheme::default()
}

impl TargetDensity {
    fn base(tag: impl Into<String>, family: Family, lo: f64, hi: f64) -> Self {
        TargetDensity {
            tag: tag.into(),
            family,
            reference: Reference1D::standard_gaussian(),
            lo,
            hi,
            breakpoints: Vec::new(),
            scale: 1.0,
            center: 0.0,
            cdf_table: None,
        }
    }

    /// The standard Gaussian itself.
    pub fn standard_gaussian() -> Self {
        Self::gaussian_scale(1.0).expect("unit variance is valid")
    }

    /// N(0, σ²) against the standard Gaussian.
    pub fn gaussian_scale(var: f64) -> Result<Self> {
        if !(var > 0.0 && var.is_finite()) {
            return Err(Error::InvalidParameter(format!("σ² must be positive, got {var}")));
        }
        let mut t = Self::base(format!("gaussian_scale(σ²={var})"), Family::Normal { var }, f64::NEG_INFINITY, f64::INFINITY);
        t.scale = var.sqrt();
        Ok(t)
    }

    /// Gamma(p) shifted to mean zero, on (-p, ∞).
    pub fn centered_gamma(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma shape must be positive, got {p}")));
        }
        let mut t = Self::base(
            format!("centered_gamma(p={p})"),
            Family::ShiftedGamma { p, ln_gamma_p: ln_gamma(p) },
            -p,
            f64::INFINITY,
        );
        t.scale = p.sqrt().max(1.0);
        Ok(t)
    }

    /// Uniform on [-√3, √3] (unit variance).
    pub fn uniform() -> Self {
        Self::uniform_on(3f64.sqrt()).expect("positive half-width")
    }

    pub fn uniform_on(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("half-width must be positive, got {c}")));
        }
        Ok(Self::base(format!("uniform(c={c})"), Family::Uniform { c }, -c, c))
    }

    /// ρ_n(x) = (2π)^{-1/2}[(1 - a) e^{-x²/2} + n a e^{-n²x²/2}].
    pub fn mixture(n: f64, a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidParameter(format!("mixture weight a = {a} outside [0, 1]")));
        }
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidParameter(format!("mixture scale n must be positive, got {n}")));
        }
        let mut t = Self::base(format!("mixture(n={n}, a={a})"), Family::Mixture { n, a }, f64::NEG_INFINITY, f64::INFINITY);
        if n != 1.0 && a > 0.0 {
            let w = 1.0 / n;
            t.breakpoints = vec![-40.0 * w, -8.0 * w, -3.0 * w, -w, 0.0, w, 3.0 * w, 8.0 * w, 40.0 * w];
        }
        Ok(t)
    }

    /// Default schedule a_n = n^{-1/2}.
    pub fn mixture_default(n: f64) -> Result<Self> {
        Self::mixture(n, n.powf(-0.5))
    }

    /// ρ ∝ (1 + x²)^{-α}; centered needs α > 1.
    pub fn student_like(alpha: f64) -> Result<Self> {
        if !(alpha > 0.5) {
            return Err(Error::NotNormalizable(format!("(1+x²)^(-α) needs α > 1/2, got {alpha}")));
        }
        if !(alpha > 1.0) {
            return Err(Error::NoMean(format!("(1+x²)^(-α) has no mean for α = {alpha} ≤ 1")));
        }
        let log_z = ln_beta(0.5, alpha - 0.5);
        Ok(Self::base(
            format!("student_like(α={alpha})"),
            Family::StudentLike { alpha, log_z },
            f64::NEG_INFINITY,
            f64::INFINITY,
        ))
    }

    /// The reference measure viewed as a target (h ≡ 1).
    pub fn of_reference(reference: Reference1D) -> Self {
        let (lo, hi) = reference.support();
        let iv = reference.interval();
        let mut t = Self::base(format!("reference[{}]", reference.name()), Family::Reference, lo, hi);
        t.scale = iv.scale;
        t.center = iv.center;
        t.reference = reference;
        t
    }

    /// dν = P/Z dμ for a polynomial P positive on the support of μ.
    ///
    /// Requires ∫ b dν = 0 (the drift of μ is centered under ν); otherwise
    /// ν has no Stein kernel relative to μ.
    pub fn tilted(reference: Reference1D, poly: Poly1) -> Result<Self> {
        let (lo, hi) = reference.support();
        let iv = reference.interval();
        // positivity: on a grid in the mapped variable, and in infinite directions
        let (t0, t1) = iv.t_bounds();
        for k in 0..=4000 {
            let t = t0 + (t1 - t0) * k as f64 / 4000.0;
            let x = iv.x_of_t(t);
            if x > lo && x < hi && !(poly.eval(x) > 0.0) {
                return Err(Error::InvalidParameter(format!("tilt polynomial not positive at x = {x}")));
            }
        }
        let lead = *poly.0.last().unwrap();
        let deg = poly.degree();
        if hi.is_infinite() && deg > 0 && lead < 0.0 {
            return Err(Error::InvalidParameter("tilt polynomial negative as x → ∞".into()));
        }
        if lo.is_infinite() && deg > 0 && (lead < 0.0) != (deg % 2 == 1) && lead != 0.0 {
            return Err(Error::InvalidParameter("tilt polynomial negative as x → -∞".into()));
        }
        let z = integrate(|x| poly.eval(x) * reference.density(x), &iv, &default_opts())?;
        if !z.converged || !(z.value > 0.0) {
            return Err(Error::NotNormalizable("tilted density".into()));
        }
        let dpoly = poly.derivative();
        let mut t = Self::base(
            format!("tilted[{}]", reference.name()),
            Family::Tilt { poly, dpoly, log_z: z.value.ln() },
            lo,
            hi,
        );
        t.scale = iv.scale;
        t.center = iv.center;
        t.reference = reference;
        let drift_mean = integrate(|x| t.reference.drift(x) * t.density(x), &t.interval(), &default_opts())?.value;
        if drift_mean.abs() > 1e-8 {
            return Err(Error::Precondition(format!(
                "∫ b dν = {drift_mean:.3e} ≠ 0: the target is not centered for the reference generator, so it has no Stein kernel"
            )));
        }
        t.build_cdf_table()?;
        Ok(t)
    }

    /// Perturbation 1 + ε Q_k of the reference by its own orthogonal
    /// polynomial of degree k ≥ 2 (Hermite, Laguerre or Legendre). These
    /// keep both normalization and the centering ∫ b dν = 0.
    pub fn perturbed(reference: Reference1D, degree: usize, eps: f64) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidParameter("perturbation degree must be at least 2".into()));
        }
        let q = match &reference {
            Reference1D::Gaussian { var } if *var == 1.0 => super::poly::hermite_he(degree),
            Reference1D::Gamma { p, .. } => super::poly::laguerre(degree, p - 1.0),
            Reference1D::Jacobi => super::poly::legendre(degree),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "no orthogonal family wired for {}",
                    reference.name()
                )))
            }
        };
        let poly = Poly1(vec![1.0]).add(&q.scale(eps));
        let mut t = Self::tilted(reference, poly)?;
        t.tag = format!("perturbed[{}](k={degree}, ε={eps})", t.reference.name());
        Ok(t)
    }

    /// Density from an unnormalized log density on (lo, hi). Not centered;
    /// see [`TargetDensity::center`].
    pub fn custom(tag: impl Into<String>, lo: f64, hi: f64, log_f: ScalarFn, dlog_f: Option<ScalarFn>) -> Result<Self> {
        Self::numeric(tag.into(), lo, hi, log_f, dlog_f, None, Vec::new(), 1.0)
    }

    /// Wraps a log density that is already normalized on (lo, hi) against
    /// the standard Gaussian reference. No CDF table is built; call
    /// [`TargetDensity::with_cdf_table`] before using quantiles.
    pub fn from_normalized(
        tag: impl Into<String>,
        (lo, hi): (f64, f64),
        log_f: ScalarFn,
        dlog_f: Option<ScalarFn>,
        breakpoints: Vec<f64>,
        scale: f64,
    ) -> Result<Self> {
        if !(lo < hi) || !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!("empty support ({lo}, {hi}) or scale {scale}")));
        }
        let mut t = Self::base(tag, Family::Numeric(Numeric { log_f, dlog_f, shift: 0.0, log_z: 0.0, pearson: None }), lo, hi);
        t.breakpoints = breakpoints;
        t.scale = scale;
        Ok(t)
    }

    pub fn with_cdf_table(mut self) -> Result<Self> {
        self.build_cdf_table()?;
        Ok(self)
    }

    #[allow(clippy::too_many_arguments)]
    fn numeric(
        tag: String,
        lo: f64,
        hi: f64,
        log_f: ScalarFn,
        dlog_f: Option<ScalarFn>,
        pearson: Option<PearsonParams>,
        breakpoints: Vec<f64>,
        scale: f64,
    ) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!("empty support ({lo}, {hi})")));
        }
        let mut probe = Interval::new(lo, hi).with_scale(scale);
        if !probe.is_finite() && lo.is_finite() != hi.is_finite() {
            probe.center = if lo.is_finite() { lo } else { hi };
        }
        // offset so exp(log_f - m) stays representable
        let (t0, t1) = probe.t_bounds();
        let mut m = f64::NEG_INFINITY;
        for k in 1..256 {
            let x = probe.x_of_t(t0 + (t1 - t0) * k as f64 / 256.0);
            let v = log_f(x);
            if v.is_finite() {
                m = m.max(v);
            }
        }
        if !m.is_finite() {
            return Err(Error::NotNormalizable(format!("{tag}: log density not finite anywhere")));
        }
        let iv = probe.clone().with_breakpoints(&breakpoints);
        let opts = AdaptiveOptions { max_segments: 2000, ..AdaptiveOptions::default() };
        let z = integrate_vec(|x| [(log_f(x) - m).exp()], &iv, &opts)
            .map_err(|e| Error::NotNormalizable(format!("{tag}: {e}")))?;
        if !z.converged || !z.value[0].is_finite() || z.value[0] <= 0.0 || z.value[0] > 1e250 {
            return Err(Error::NotNormalizable(format!("{tag}: ∫ρ does not converge")));
        }
        let log_z = z.value[0].ln() + m;
        let mut t = Self::base(
            tag,
            Family::Numeric(Numeric { log_f, dlog_f, shift: 0.0, log_z, pearson }),
            lo,
            hi,
        );
        t.breakpoints = breakpoints;
        t.scale = scale;
        t.center = probe.center;
        t.build_cdf_table()?;
        Ok(t)
    }

    /// Solution of the Pearson equation on the parameter support, normalized
    /// and shifted to mean zero.
    pub fn pearson(params: PearsonParams) -> Result<Self> {
        params.validate()?;
        let (lo, hi) = params.support();
        let p = params;
        let log_f: ScalarFn = Arc::new(move |x: f64| -p.antiderivative(x));
        let dlog_f: ScalarFn = Arc::new(move |x: f64| p.score(x));
        let scale = {
            let q0 = params.q(if lo.is_finite() && hi.is_finite() { 0.5 * (lo + hi) } else { 0.0 }).abs();
            if q0 > 0.0 { q0.sqrt().max(0.1) } else { 1.0 }
        };
        let t = Self::numeric(
            format!("pearson({},{},{},{},{})", p.a0, p.a1, p.b0, p.b1, p.b2),
            lo,
            hi,
            log_f,
            Some(dlog_f),
            Some(params),
            Vec::new(),
            scale,
        )?;
        t.center()
    }

    /// Shifts the density to mean zero.
    pub fn center(&self) -> Result<Self> {
        match &self.family {
            Family::Normal { .. }
            | Family::ShiftedGamma { .. }
            | Family::Uniform { .. }
            | Family::Mixture { .. }
            | Family::StudentLike { .. } => return Ok(self.clone()),
            Family::Reference | Family::Tilt { .. } => {
                return Err(Error::Precondition(
                    "targets tied to a non-Gaussian reference are centered through the generator drift".into(),
                ))
            }
            Family::Numeric(_) => {}
        }
        let iv = self.interval();
        let opts = AdaptiveOptions { max_segments: 2000, ..AdaptiveOptions::default() };
        let r = integrate_vec(|x| { let d = self.density(x); [x.abs() * d, x * d] }, &iv, &opts)
            .map_err(|e| Error::NoMean(format!("{}: {e}", self.tag)))?;
        if !r.converged || !r.value[0].is_finite() || r.value[0] > 1e250 {
            return Err(Error::NoMean(format!("{}: ∫|x|ρ does not converge", self.tag)));
        }
        let m = r.value[1];
        if m.abs() <= 1e-14 * r.value[0].max(1.0) {
            return Ok(self.clone());
        }
        let mut t = self.clone();
        if let Family::Numeric(n) = &mut t.family {
            n.shift += m;
        }
        t.lo = self.lo - m;
        t.hi = self.hi - m;
        t.breakpoints = self.breakpoints.iter().map(|b| b - m).collect();
        t.center = self.center - m;
        t.build_cdf_table()?;
        Ok(t)
    }

    /// Re-attaches the target to another reference measure.
    pub fn with_reference(mut self, reference: Reference1D) -> Result<Self> {
        let (rlo, rhi) = reference.support();
        if self.lo < rlo || self.hi > rhi {
            return Err(Error::InvalidParameter(format!(
                "target support ({}, {}) not inside reference support ({rlo}, {rhi})",
                self.lo, self.hi
            )));
        }
        self.reference = reference;
        Ok(self)
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn reference(&self) -> &Reference1D {
        &self.reference
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Integration domain over the support with this family's hints.
    pub fn interval(&self) -> Interval {
        let mut iv = Interval::new(self.lo, self.hi).with_scale(self.scale).with_breakpoints(&self.breakpoints);
        if !self.lo.is_finite() && !self.hi.is_finite() {
            iv.center = self.center;
        }
        crate::quadrature::overrides().truncate(iv)
    }

    /// Pearson parameters when the target was built from them.
    pub fn pearson_params(&self) -> Option<(PearsonParams, f64)> {
        match &self.family {
            Family::Numeric(n) => n.pearson.map(|p| (p, n.shift)),
            _ => None,
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if !(x >= self.lo && x <= self.hi) {
            return f64::NEG_INFINITY;
        }
        match &self.family {
            Family::Normal { var } => -0.5 * x * x / var - 0.5 * var.ln() - LN_SQRT_2PI,
            Family::ShiftedGamma { p, ln_gamma_p } => {
                let g = x + p;
                if g <= 0.0 {
                    return if *p == 1.0 { 0.0 } else if *p < 1.0 { f64::INFINITY } else { f64::NEG_INFINITY };
                }
                (p - 1.0) * g.ln() - g - ln_gamma_p
            }
            Family::Uniform { c } => -(2.0 * c).ln(),
            Family::Mixture { n, a } => {
                let l1 = (1.0 - a).ln() - 0.5 * x * x;
                let l2 = (a * n).ln() - 0.5 * (n * x) * (n * x);
                let m = l1.max(l2);
                if m == f64::NEG_INFINITY {
                    return m;
                }
                m + ((l1 - m).exp() + (l2 - m).exp()).ln() - LN_SQRT_2PI
            }
            Family::StudentLike { alpha, log_z } => -alpha * (x * x).ln_1p() - log_z,
            Family::Reference => self.reference.log_density(x),
            Family::Tilt { poly, log_z, .. } => self.reference.log_density(x) + poly.eval(x).ln() - log_z,
            Family::Numeric(n) => (n.log_f)(x + n.shift) - n.log_z,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// ρ'/ρ; analytic where the family allows, else a central difference
    /// with step 1e-6·(1 + |x|).
    pub fn dlog_density(&self, x: f64) -> f64 {
        match &self.family {
            Family::Normal { var } => -x / var,
            Family::ShiftedGamma { p, .. } => (p - 1.0) / (x + p) - 1.0,
            Family::Uniform { .. } => 0.0,
            Family::Mixture { n, a } => {
                // weights of the two components at x
                let l1 = (1.0 - a).ln() - 0.5 * x * x;
                let l2 = (a * n).ln() - 0.5 * (n * x) * (n * x);
                let m = l1.max(l2);
                let (w1, w2) = ((l1 - m).exp(), (l2 - m).exp());
                (w1 * (-x) + w2 * (-n * n * x)) / (w1 + w2)
            }
            Family::StudentLike { alpha, .. } => -2.0 * alpha * x / (1.0 + x * x),
            Family::Reference => self.reference.dlog_density(x),
            Family::Tilt { poly, dpoly, .. } => self.reference.dlog_density(x) + dpoly.eval(x) / poly.eval(x),
            Family::Numeric(n) => match &n.dlog_f {
                Some(d) => d(x + n.shift),
                None => {
                    let h = 1e-6 * (1.0 + x.abs());
                    let (a, b) = ((x - h).max(self.lo), (x + h).min(self.hi));
                    ((n.log_f)(b + n.shift) - (n.log_f)(a + n.shift)) / (b - a)
                }
            },
        }
    }

    /// log h = log ρ - log ρ_ref.
    pub fn log_relative(&self, x: f64) -> f64 {
        match &self.family {
            Family::Reference => 0.0,
            Family::Tilt { poly, log_z, .. } => poly.eval(x).ln() - log_z,
            _ => self.log_density(x) - self.reference.log_density(x),
        }
    }

    /// (log h)'.
    pub fn dlog_relative(&self, x: f64) -> f64 {
        match &self.family {
            Family::Reference => 0.0,
            Family::Tilt { poly, dpoly, .. } => dpoly.eval(x) / poly.eval(x),
            _ => self.dlog_density(x) - self.reference.dlog_density(x),
        }
    }

    fn build_cdf_table(&mut self) -> Result<()> {
        let needs = matches!(self.family, Family::Tilt { .. } | Family::Numeric(_))
            || matches!(self.family, Family::Reference if matches!(self.reference, Reference1D::LogConcave { .. }));
        if !needs {
            self.cdf_table = None;
            return Ok(());
        }
        let iv = self.interval();
        let (t0, t1) = iv.t_bounds();
        let mut xs: Vec<f64> = (0..=CDF_PANELS)
            .map(|k| {
                if k == 0 {
                    self.lo
                } else if k == CDF_PANELS {
                    self.hi
                } else {
                    iv.x_of_t(t0 + (t1 - t0) * k as f64 / CDF_PANELS as f64)
                }
            })
            .collect();
        xs.dedup();
        let opts = AdaptiveOptions { abs_tol: 1e-300, rel_tol: 1e-12, max_segments: 400, initial_pieces: 1 };
        let mut panels = Vec::with_capacity(xs.len() - 1);
        for w in xs.windows(2) {
            let piv = Interval::new(w[0], w[1]).with_scale(self.scale).with_breakpoints(&self.breakpoints);
            let r = integrate_vec(|x| [self.density(x)], &piv, &opts)?;
            panels.push(r.value[0]);
        }
        let total: f64 = crate::parallel::pairwise_sum(&panels);
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::NotNormalizable(format!("{}: CDF table mass {total}", self.tag)));
        }
        let mut left = vec![0.0; xs.len()];
        for k in 0..panels.len() {
            left[k + 1] = left[k] + panels[k] / total;
        }
        let mut right = vec![0.0; xs.len()];
        for k in (0..panels.len()).rev() {
            right[k] = right[k + 1] + panels[k] / total;
        }
        self.cdf_table = Some(Arc::new(CdfTable { xs, left, right }));
        Ok(())
    }

    fn table_cdf_sf(&self, table: &CdfTable, x: f64) -> (f64, f64) {
        if x <= self.lo {
            return (0.0, 1.0);
        }
        if x >= self.hi {
            return (1.0, 0.0);
        }
        let k = table.xs.partition_point(|&v| v <= x).saturating_sub(1).min(table.xs.len() - 2);
        let (a, b) = (table.xs[k], table.xs[k + 1]);
        let opts = AdaptiveOptions { abs_tol: 1e-300, rel_tol: 1e-12, max_segments: 200, initial_pieces: 1 };
        let part = |lo: f64, hi: f64| -> f64 {
            if !(lo < hi) {
                return 0.0;
            }
            let piv = Interval::new(lo, hi).with_scale(self.scale).with_breakpoints(&self.breakpoints);
            integrate_vec(|y| [self.density(y)], &piv, &opts).map(|r| r.value[0]).unwrap_or(f64::NAN)
        };
        let c = table.left[k] + part(a, x);
        let sf = table.right[k + 1] + part(x, b);
        (c.clamp(0.0, 1.0), sf.clamp(0.0, 1.0))
    }

    /// (F(x), 1 - F(x)), each computed on its own side for tail precision.
    pub fn cdf_sf(&self, x: f64) -> (f64, f64) {
        match &self.family {
            Family::Normal { var } => {
                let z = x / var.sqrt();
                (normal_cdf(z), normal_sf(z))
            }
            Family::ShiftedGamma { p, .. } => (gamma_cdf(*p, x + p), gamma_sf(*p, x + p)),
            Family::Uniform { c } => {
                let u = ((x + c) / (2.0 * c)).clamp(0.0, 1.0);
                (u, ((c - x) / (2.0 * c)).clamp(0.0, 1.0))
            }
            Family::Mixture { n, a } => (
                (1.0 - a) * normal_cdf(x) + a * normal_cdf(n * x),
                (1.0 - a) * normal_sf(x) + a * normal_sf(n * x),
            ),
            Family::StudentLike { alpha, .. } => {
                // P(X > x) = ½ I_{1/(1+x²)}(α - ½, ½) for x ≥ 0
                let tail = 0.5 * beta_reg(alpha - 0.5, 0.5, 1.0 / (1.0 + x * x));
                if x >= 0.0 { (1.0 - tail, tail) } else { (tail, 1.0 - tail) }
            }
            Family::Reference if !matches!(self.reference, Reference1D::LogConcave { .. }) => {
                (self.reference.cdf(x), self.reference.sf(x))
            }
            _ => match &self.cdf_table {
                Some(t) => self.table_cdf_sf(t, x),
                None => (f64::NAN, f64::NAN),
            },
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_sf(x).0
    }

    pub fn sf(&self, x: f64) -> f64 {
        self.cdf_sf(x).1
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidParameter(format!("quantile level {u} outside (0, 1)")));
        }
        match &self.family {
            Family::Normal { var } => Ok(var.sqrt() * normal_quantile(u)),
            Family::ShiftedGamma { p, .. } => Ok(gamma_quantile(*p, u)? - p),
            Family::Uniform { c } => Ok(c * (2.0 * u - 1.0)),
            Family::Reference => self.reference.quantile(u),
            _ => {
                if u <= 0.5 {
                    quantile_on(|x| self.cdf(x), u, self.lo, self.hi)
                } else {
                    self.upper_quantile(1.0 - u)
                }
            }
        }
    }

    /// x with ν((x, ∞)) = s.
    pub fn upper_quantile(&self, s: f64) -> Result<f64> {
        match &self.family {
            Family::Normal { var } => Ok(var.sqrt() * normal_upper_quantile(s)),
            Family::ShiftedGamma { p, .. } => Ok(gamma_upper_quantile(*p, s)? - p),
            Family::Uniform { c } => Ok(c * (1.0 - 2.0 * s)),
            Family::Reference => self.reference.upper_quantile(s),
            _ => upper_quantile_on(|x| self.sf(x), s, self.lo, self.hi),
        }
    }

    /// Quantile at level F given both F and 1 - F, using whichever side
    /// carries more precision.
    pub fn quantile_from(&self, cdf: f64, sf: f64) -> Result<f64> {
        if cdf <= 0.0 {
            return Ok(self.lo);
        }
        if sf <= 0.0 {
            return Ok(self.hi);
        }
        if cdf <= sf {
            self.quantile(cdf)
        } else {
            self.upper_quantile(sf)
        }
    }

    /// ∫ f dν by adaptive quadrature over the support.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        integrate(|x| { let d = self.density(x); if d == 0.0 { 0.0 } else { f(x) * d } }, &self.interval(), &default_opts())?.checked()
    }

    pub fn mean(&self) -> Result<f64> {
        match &self.family {
            Family::Normal { .. } | Family::ShiftedGamma { .. } | Family::Uniform { .. } | Family::Mixture { .. } | Family::StudentLike { .. } => Ok(0.0),
            Family::Reference => Ok(self.reference.mean()),
            _ => self.expect(|x| x),
        }
    }

    pub fn variance(&self) -> Result<f64> {
        match &self.family {
            Family::Normal { var } => Ok(*var),
            Family::ShiftedGamma { p, .. } => Ok(*p),
            Family::Uniform { c } => Ok(c * c / 3.0),
            Family::Mixture { n, a } => Ok((1.0 - a) + a / (n * n)),
            Family::StudentLike { alpha, .. } if *alpha > 1.5 => Ok(1.0 / (2.0 * alpha - 3.0)),
            Family::StudentLike { .. } => Ok(f64::INFINITY),
            _ => {
                let m = self.mean()?;
                self.expect(|x| (x - m) * (x - m))
            }
        }
    }

    /// One draw from ν.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.family {
            Family::Normal { var } => {
                let z: f64 = StandardNormal.sample(rng);
                var.sqrt() * z
            }
            Family::ShiftedGamma { p, .. } => Gamma::new(*p, 1.0).expect("valid shape").sample(rng) - p,
            Family::Uniform { c } => rng.random_range(-c..*c),
            Family::Mixture { n, a } => {
                let z: f64 = StandardNormal.sample(rng);
                if rng.random::<f64>() < *a { z / n } else { z }
            }
            Family::StudentLike { alpha, .. } => {
                let nu = 2.0 * alpha - 1.0;
                let t: f64 = StudentT::new(nu).expect("positive dof").sample(rng);
                t / nu.sqrt()
            }
            Family::Reference => self.reference.sample(rng),
            _ => {
                let u: f64 = rng.random_range(f64::EPSILON..1.0);
                self.quantile(u).unwrap_or(f64::NAN)
            }
        }
    }
}
