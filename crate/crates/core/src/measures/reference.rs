use nalgebra::DMatrix;
use rand::{Rng, RngExt};
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::poly::Poly1;
use super::special::*;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, quantile_on, upper_quantile_on, IntegrationScheme, Interval};

/// Serializable description of a one-dimensional reference measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSpec {
    Gaussian {
        #[serde(default = "one")]
        var: f64,
    },
    Gamma {
        p: f64,
    },
    UniformJacobi,
    LogConcave {
        potential: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl ReferenceSpec {
    pub fn build(&self) -> Result<Reference1D> {
        match self {
            ReferenceSpec::Gaussian { var } => Reference1D::gaussian(*var),
            ReferenceSpec::Gamma { p } => Reference1D::gamma(*p),
            ReferenceSpec::UniformJacobi => Ok(Reference1D::Jacobi),
            ReferenceSpec::LogConcave { potential } => Reference1D::log_concave(Poly1::new(potential.clone())),
        }
    }
}

/// A one-dimensional reference measure μ together with its diffusion
/// generator `L f = a f'' + b f'` (μ is invariant and `a` is a Stein
/// kernel for μ).
#[derive(Debug, Clone, PartialEq)]
pub enum Reference1D {
    /// N(0, var) with a = var, b = -x.
    Gaussian { var: f64 },
    /// γ_p(dx) = x^{p-1} e^{-x} / Γ(p) dx on (0, ∞), with a = x, b = p - x.
    Gamma { p: f64, ln_gamma_p: f64 },
    /// Uniform probability on [-1, 1], with a = 1 - x², b = -2x.
    Jacobi,
    /// e^{-u}/Z on ℝ, with a = 1, b = -u'.
    LogConcave { u: Poly1, du: Poly1, log_z: f64, mode: f64 },
}

impl Reference1D {
    pub fn standard_gaussian() -> Self {
        Reference1D::Gaussian { var: 1.0 }
    }

    pub fn gaussian(var: f64) -> Result<Self> {
        if !(var > 0.0 && var.is_finite()) {
            return Err(Error::InvalidParameter(format!("Gaussian variance must be positive, got {var}")));
        }
        Ok(Reference1D::Gaussian { var })
    }

    pub fn gamma(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma shape must be positive, got {p}")));
        }
        Ok(Reference1D::Gamma { p, ln_gamma_p: ln_gamma(p) })
    }

    /// Log-concave reference e^{-u}/Z. The potential must have even degree
    /// and a positive leading coefficient so that e^{-u} is integrable.
    pub fn log_concave(u: Poly1) -> Result<Self> {
        let deg = u.degree();
        let lead = *u.0.last().unwrap();
        if deg < 2 || deg % 2 == 1 || !(lead > 0.0) {
            return Err(Error::NotNormalizable(
                "potential needs even degree ≥ 2 and a positive leading coefficient".into(),
            ));
        }
        let du = u.derivative();
        // locate the minimum of u by bisection on u' (u is assumed convex near its minimum)
        let mode = {
            let (mut a, mut b) = (-1.0, 1.0);
            while du.eval(a) > 0.0 {
                a *= 2.0;
            }
            while du.eval(b) < 0.0 {
                b *= 2.0;
            }
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if du.eval(m) < 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
        let u_min = u.eval(mode);
        let z = integrate(
            |x| (-(u.eval(x) - u_min)).exp(),
            &Interval::real_line().with_center(mode),
            &IntegrationScheme::default(),
        )?
        .checked()?;
        Ok(Reference1D::LogConcave { log_z: z.ln() + u_min, u, du, mode })
    }

    pub fn name(&self) -> String {
        match self {
            Reference1D::Gaussian { var } if *var == 1.0 => "gaussian".into(),
            Reference1D::Gaussian { var } => format!("gaussian(var={var})"),
            Reference1D::Gamma { p, .. } => format!("gamma(p={p})"),
            Reference1D::Jacobi => "uniform_jacobi".into(),
            Reference1D::LogConcave { u, .. } => format!("log_concave(u={:?})", u.0),
        }
    }

    pub fn spec(&self) -> ReferenceSpec {
        match self {
            Reference1D::Gaussian { var } => ReferenceSpec::Gaussian { var: *var },
            Reference1D::Gamma { p, .. } => ReferenceSpec::Gamma { p: *p },
            Reference1D::Jacobi => ReferenceSpec::UniformJacobi,
            Reference1D::LogConcave { u, .. } => ReferenceSpec::LogConcave { potential: u.0.clone() },
        }
    }

    pub fn is_standard_gaussian(&self) -> bool {
        matches!(self, Reference1D::Gaussian { var } if *var == 1.0)
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Reference1D::Gaussian { .. } | Reference1D::LogConcave { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Reference1D::Gamma { .. } => (0.0, f64::INFINITY),
            Reference1D::Jacobi => (-1.0, 1.0),
        }
    }

    /// Integration domain with a map scale matched to the measure.
    pub fn interval(&self) -> Interval {
        let (lo, hi) = self.support();
        match self {
            Reference1D::Gaussian { var } => Interval::new(lo, hi).with_scale(var.sqrt()),
            Reference1D::Gamma { p, .. } => Interval::new(lo, hi).with_scale(p.max(1.0)),
            Reference1D::Jacobi => Interval::new(lo, hi),
            Reference1D::LogConcave { mode, .. } => Interval::new(lo, hi).with_center(*mode),
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        let (lo, hi) = self.support();
        x > lo && x < hi || (x == lo && lo.is_finite() && matches!(self, Reference1D::Jacobi))
            || (x == hi && hi.is_finite() && matches!(self, Reference1D::Jacobi))
    }

    pub fn log_density(&self, x: f64) -> f64 {
        match self {
            Reference1D::Gaussian { var } => -0.5 * x * x / var - 0.5 * var.ln() - LN_SQRT_2PI,
            Reference1D::Gamma { p, ln_gamma_p } => {
                if x <= 0.0 {
                    if x == 0.0 && *p == 1.0 {
                        return 0.0;
                    }
                    return f64::NEG_INFINITY;
                }
                (p - 1.0) * x.ln() - x - ln_gamma_p
            }
            Reference1D::Jacobi => {
                if x.abs() <= 1.0 {
                    -std::f64::consts::LN_2
                } else {
                    f64::NEG_INFINITY
                }
            }
            Reference1D::LogConcave { u, log_z, .. } => -u.eval(x) - log_z,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// (log density)'.
    pub fn dlog_density(&self, x: f64) -> f64 {
        match self {
            Reference1D::Gaussian { var } => -x / var,
            Reference1D::Gamma { p, .. } => (p - 1.0) / x - 1.0,
            Reference1D::Jacobi => 0.0,
            Reference1D::LogConcave { du, .. } => -du.eval(x),
        }
    }

    /// Diffusion coefficient a(x).
    pub fn diffusion(&self, x: f64) -> f64 {
        match self {
            Reference1D::Gaussian { var } => *var,
            Reference1D::Gamma { .. } => x,
            Reference1D::Jacobi => 1.0 - x * x,
            Reference1D::LogConcave { .. } => 1.0,
        }
    }

    pub fn diffusion_prime(&self, x: f64) -> f64 {
        match self {
            Reference1D::Gaussian { .. } | Reference1D::LogConcave { .. } => 0.0,
            Reference1D::Gamma { .. } => 1.0,
            Reference1D::Jacobi => -2.0 * x,
        }
    }

    /// Drift b(x) of the generator.
    pub fn drift(&self, x: f64) -> f64 {
        match self {
            Reference1D::Gaussian { .. } => -x,
            Reference1D::Gamma { p, .. } => p - x,
            Reference1D::Jacobi => -2.0 * x,
            Reference1D::LogConcave { du, .. } => -du.eval(x),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Reference1D::Gaussian { .. } | Reference1D::Jacobi => 0.0,
            Reference1D::Gamma { p, .. } => *p,
            Reference1D::LogConcave { .. } => self.numeric_moment(1),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Reference1D::Gaussian { var } => *var,
            Reference1D::Gamma { p, .. } => *p,
            Reference1D::Jacobi => 1.0 / 3.0,
            Reference1D::LogConcave { .. } => {
                let m = self.mean();
                self.numeric_moment(2) - m * m
            }
        }
    }

    fn numeric_moment(&self, k: i32) -> f64 {
        integrate(|x| x.powi(k) * self.density(x), &self.interval(), &IntegrationScheme::default())
            .map(|e| e.value)
            .unwrap_or(f64::NAN)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Reference1D::Gaussian { var } => normal_cdf(x / var.sqrt()),
            Reference1D::Gamma { p, .. } => gamma_cdf(*p, x),
            Reference1D::Jacobi => ((x + 1.0) / 2.0).clamp(0.0, 1.0),
            Reference1D::LogConcave { .. } => {
                if x == f64::INFINITY {
                    return 1.0;
                }
                integrate(|y| self.density(y), &Interval::new(f64::NEG_INFINITY, x), &IntegrationScheme::default())
                    .map(|e| e.value.clamp(0.0, 1.0))
                    .unwrap_or(f64::NAN)
            }
        }
    }

    pub fn sf(&self, x: f64) -> f64 {
        match self {
            Reference1D::Gaussian { var } => normal_sf(x / var.sqrt()),
            Reference1D::Gamma { p, .. } => gamma_sf(*p, x),
            Reference1D::Jacobi => ((1.0 - x) / 2.0).clamp(0.0, 1.0),
            Reference1D::LogConcave { .. } => {
                if x == f64::NEG_INFINITY {
                    return 1.0;
                }
                integrate(|y| self.density(y), &Interval::new(x, f64::INFINITY), &IntegrationScheme::default())
                    .map(|e| e.value.clamp(0.0, 1.0))
                    .unwrap_or(f64::NAN)
            }
        }
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidParameter(format!("quantile level {u} outside (0, 1)")));
        }
        match self {
            Reference1D::Gaussian { var } => Ok(var.sqrt() * normal_quantile(u)),
            Reference1D::Gamma { p, .. } => gamma_quantile(*p, u),
            Reference1D::Jacobi => Ok(2.0 * u - 1.0),
            Reference1D::LogConcave { .. } => {
                if u <= 0.5 {
                    quantile_on(|x| self.cdf(x), u, f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    self.upper_quantile(1.0 - u)
                }
            }
        }
    }

    /// x with μ((x, ∞)) = s.
    pub fn upper_quantile(&self, s: f64) -> Result<f64> {
        match self {
            Reference1D::Gaussian { var } => Ok(var.sqrt() * normal_upper_quantile(s)),
            Reference1D::Gamma { p, .. } => gamma_upper_quantile(*p, s),
            Reference1D::Jacobi => Ok(1.0 - 2.0 * s),
            Reference1D::LogConcave { .. } => upper_quantile_on(|x| self.sf(x), s, f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Quantile at level F given both F and 1 - F, using whichever side
    /// carries more precision.
    pub fn quantile_from(&self, cdf: f64, sf: f64) -> Result<f64> {
        if cdf <= 0.0 {
            return Ok(self.support().0);
        }
        if sf <= 0.0 {
            return Ok(self.support().1);
        }
        if cdf <= sf {
            self.quantile(cdf)
        } else {
            self.upper_quantile(sf)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Reference1D::Gaussian { var } => {
                let z: f64 = StandardNormal.sample(rng);
                var.sqrt() * z
            }
            Reference1D::Gamma { p, .. } => Gamma::new(*p, 1.0).expect("valid gamma shape").sample(rng),
            Reference1D::Jacobi => rng.random_range(-1.0..1.0),
            Reference1D::LogConcave { .. } => {
                let u: f64 = rng.random_range(f64::EPSILON..1.0);
                self.quantile(u).unwrap_or(f64::NAN)
            }
        }
    }
}

/// A reference measure on ℝ^d.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceMeasure {
    Gaussian { cov: DMatrix<f64> },
    GammaProduct { shapes: Vec<f64> },
    UniformJacobi { dim: usize },
    LogConcave(Reference1D),
}

impl ReferenceMeasure {
    pub fn standard_gaussian(d: usize) -> Self {
        ReferenceMeasure::Gaussian { cov: DMatrix::identity(d, d) }
    }

    pub fn gaussian(cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() || cov.nrows() == 0 {
            return Err(Error::Dimension("covariance must be a non-empty square matrix".into()));
        }
        if (&cov - cov.transpose()).amax() > 1e-12 * cov.amax().max(1.0) {
            return Err(Error::InvalidParameter("covariance must be symmetric".into()));
        }
        if cov.clone().cholesky().is_none() {
            return Err(Error::InvalidParameter("covariance must be positive definite".into()));
        }
        Ok(ReferenceMeasure::Gaussian { cov })
    }

    pub fn gamma_product(shapes: Vec<f64>) -> Result<Self> {
        if shapes.is_empty() || shapes.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidParameter("gamma shapes must be positive".into()));
        }
        Ok(ReferenceMeasure::GammaProduct { shapes })
    }

    pub fn dimension(&self) -> usize {
        match self {
            ReferenceMeasure::Gaussian { cov } => cov.nrows(),
            ReferenceMeasure::GammaProduct { shapes } => shapes.len(),
            ReferenceMeasure::UniformJacobi { dim } => *dim,
            ReferenceMeasure::LogConcave(_) => 1,
        }
    }

    /// One-dimensional marginal when the measure is a product.
    pub fn marginal(&self, i: usize) -> Option<Reference1D> {
        match self {
            ReferenceMeasure::Gaussian { cov } => {
                let offdiag = (0..cov.nrows()).any(|j| j != i && cov[(i, j)] != 0.0);
                if offdiag {
                    None
                } else {
                    Reference1D::gaussian(cov[(i, i)]).ok()
                }
            }
            ReferenceMeasure::GammaProduct { shapes } => shapes.get(i).and_then(|&p| Reference1D::gamma(p).ok()),
            ReferenceMeasure::UniformJacobi { dim } => (i < *dim).then_some(Reference1D::Jacobi),
            ReferenceMeasure::LogConcave(r) => (i == 0).then(|| r.clone()),
        }
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        match self {
            ReferenceMeasure::Gaussian { cov } => {
                let d = cov.nrows();
                let chol = cov.clone().cholesky().expect("validated covariance");
                let v = nalgebra::DVector::from_column_slice(x);
                let sol = chol.solve(&v);
                let logdet = 2.0 * chol.l().diagonal().iter().map(|l| l.ln()).sum::<f64>();
                -0.5 * v.dot(&sol) - 0.5 * logdet - d as f64 * LN_SQRT_2PI
            }
            _ => (0..self.dimension())
                .map(|i| self.marginal(i).map(|m| m.log_density(x[i])).unwrap_or(f64::NAN))
                .sum(),
        }
    }

    /// Diffusion matrix a(x).
    pub fn diffusion(&self, x: &[f64]) -> DMatrix<f64> {
        match self {
            ReferenceMeasure::Gaussian { cov } => cov.clone(),
            ReferenceMeasure::GammaProduct { .. } => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(x)),
            ReferenceMeasure::UniformJacobi { .. } => {
                DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(x.len(), x.iter().map(|v| 1.0 - v * v)))
            }
            ReferenceMeasure::LogConcave(_) => DMatrix::identity(1, 1),
        }
    }
}
