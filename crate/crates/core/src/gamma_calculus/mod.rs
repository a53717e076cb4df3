//! Iterated carré du champ operators Γ, Γ₂, Γ₃ of one-dimensional diffusions
//! Lf = a f'' + b f', computed exactly on rational polynomials.

mod criteria;
mod rpoly;

use std::sync::Arc;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

pub use criteria::{
    check_criteria, default_grid, log_concave_conditions, point_grid, random_test_set, CriteriaReport, CriterionSlack,
    LogConcaveReport, PointSlack, CRITERION_TOL,
};
pub use rpoly::{rat, rat_f64, RPoly};

use crate::error::{Error, Result};
use crate::measures::{Poly1, Reference1D};

/// Lf = a f'' + b f' on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Diffusion1D {
    pub name: String,
    pub a: RPoly,
    pub b: RPoly,
    pub support: (f64, f64),
}

impl Diffusion1D {
    pub fn new(name: impl Into<String>, a: RPoly, b: RPoly, support: (f64, f64)) -> Self {
        Diffusion1D { name: name.into(), a, b, support }
    }

    /// a = 1, b = -x.
    pub fn ornstein_uhlenbeck() -> Self {
        Self::new("ornstein_uhlenbeck", RPoly::from_ints(&[1]), RPoly::from_ints(&[0, -1]), (f64::NEG_INFINITY, f64::INFINITY))
    }

    /// a = x, b = p - x on (0, ∞).
    pub fn laguerre(p: f64) -> Result<Self> {
        if !(p > 0.0) {
            return Err(Error::InvalidParameter(format!("Laguerre operator needs p > 0, got {p}")));
        }
        Ok(Self::new(format!("laguerre(p={p})"), RPoly::from_ints(&[0, 1]), RPoly::from_f64(&[p, -1.0])?, (0.0, f64::INFINITY)))
    }

    /// a = 1 - x², b = -2x on [-1, 1].
    pub fn jacobi() -> Self {
        Self::new("jacobi", RPoly::from_ints(&[1, 0, -1]), RPoly::from_ints(&[0, -2]), (-1.0, 1.0))
    }

    /// a = 1, b = -u' for dμ = e^{-u} dx.
    pub fn log_concave(u: &Poly1) -> Result<Self> {
        let u = RPoly::from_f64(&u.0)?;
        Ok(Self::new("log_concave", RPoly::from_ints(&[1]), RPoly::zero().sub(&u.derivative()), (f64::NEG_INFINITY, f64::INFINITY)))
    }

    pub fn of_reference(r: &Reference1D) -> Result<Self> {
        match r {
            Reference1D::Gaussian { var } => {
                Ok(Self::new(r.name(), RPoly::from_f64(&[*var])?, RPoly::from_ints(&[0, -1]), (f64::NEG_INFINITY, f64::INFINITY)))
            }
            Reference1D::Gamma { p, .. } => Self::laguerre(*p),
            Reference1D::Jacobi => Ok(Self::jacobi()),
            Reference1D::LogConcave { u, .. } => Self::log_concave(u),
        }
    }

    pub fn generator(&self, f: &RPoly) -> RPoly {
        self.a.mul(&f.nth_derivative(2)).add(&self.b.mul(&f.derivative()))
    }

    /// Γ_n(f, g) = ½[L Γ_{n-1}(f, g) - Γ_{n-1}(f, Lg) - Γ_{n-1}(g, Lf)],
    /// Γ₀(f, g) = fg.
    pub fn gamma_bilinear(&self, n: usize, f: &RPoly, g: &RPoly) -> RPoly {
        if n == 0 {
            return f.mul(g);
        }
        let lf = self.generator(f);
        let lg = self.generator(g);
        let prev = self.gamma_bilinear(n - 1, f, g);
        let t = self.generator(&prev).sub(&self.gamma_bilinear(n - 1, f, &lg)).sub(&self.gamma_bilinear(n - 1, g, &lf));
        t.scale(&rat(1, 2))
    }

    /// The same operator with coefficients re-expanded around x₀.
    fn shifted(&self, x0: &BigRational) -> Self {
        Diffusion1D { name: self.name.clone(), a: self.a.shift(x0), b: self.b.shift(x0), support: self.support }
    }
}

/// A test function: an exact polynomial, or a callable with a declared
/// number of available derivatives.
#[derive(Clone)]
pub enum SymbolicFn {
    Poly(RPoly),
    Callable { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, order: usize },
}

impl std::fmt::Debug for SymbolicFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SymbolicFn::Poly(p) => write!(f, "Poly({p})"),
            SymbolicFn::Callable { order, .. } => write!(f, "Callable(order={order})"),
        }
    }
}

/// Relative step for finite differences of callables.
pub const FD_STEP: f64 = 0.05;

/// k-th derivative by central differences at steps h and h/2 with one
/// Richardson step.
fn fd_derivative(f: &dyn Fn(f64) -> f64, x: f64, k: usize) -> f64 {
    if k == 0 {
        return f(x);
    }
    let d = |h: f64| {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for j in 0..=k {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * f(x + (k as f64 / 2.0 - j as f64) * h);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        acc / h.powi(k as i32)
    };
    let h = FD_STEP * x.abs().max(1.0);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

/// Γ_n(f) as an exact polynomial.
pub fn iterated_gamma(diff: &Diffusion1D, n: usize, f: &RPoly) -> Result<RPoly> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidParameter(format!("iterated Γ is available for n = 1, 2, 3, got {n}")));
    }
    Ok(diff.gamma_bilinear(n, f, f))
}

/// Γ_n(f)(x). For a callable, Γ_n(f)(x) only involves f', ..., f^(n) at x,
/// so the recursion runs exactly on the degree-n Taylor polynomial built
/// from finite differences.
pub fn iterated_gamma_at(diff: &Diffusion1D, n: usize, f: &SymbolicFn, x: f64) -> Result<f64> {
    match f {
        SymbolicFn::Poly(p) => Ok(iterated_gamma(diff, n, p)?.eval_f64(x)),
        SymbolicFn::Callable { f, order } => {
            if *order < n {
                return Err(Error::Precondition(format!("Γ_{n} needs {n} derivatives, the callable declares {order}")));
            }
            let x0 = rat_f64(x)?;
            let mut fact = 1.0;
            let mut c = Vec::with_capacity(n + 1);
            for k in 0..=n {
                if k > 0 {
                    fact *= k as f64;
                }
                c.push(fd_derivative(f.as_ref(), x, k) / fact);
            }
            let jet = RPoly::from_f64(&c)?;
            let g = iterated_gamma(&diff.shifted(&x0), n, &jet)?;
            Ok(g.coeff(0).to_f64().unwrap_or(f64::NAN))
        }
    }
}

/// ‖a^{1/2} Hess(f) a^{1/2}‖² = a² f''² in one dimension.
pub fn hessian_term(diff: &Diffusion1D, f: &RPoly) -> RPoly {
    let af2 = diff.a.mul(&f.nth_derivative(2));
    af2.mul(&af2)
}

/// Γ₃(f) - Γ₂(f) for the Jacobi operator, in the factored form
/// (1 - x²)[((1 - x²)f''' - 3xf'' - f')² + (f' + xf'')² + 2f''²].
pub fn jacobi_gamma3_gap(f: &RPoly) -> RPoly {
    let (d1, d2, d3) = (f.derivative(), f.nth_derivative(2), f.nth_derivative(3));
    let x = RPoly::x();
    let w = RPoly::from_ints(&[1, 0, -1]);
    let a = w.mul(&d3).sub(&x.mul(&d2).scale(&rat(3, 1))).sub(&d1);
    let b = d1.add(&x.mul(&d2));
    let inner = a.mul(&a).add(&b.mul(&b)).add(&d2.mul(&d2).scale(&rat(2, 1)));
    w.mul(&inner)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaValues {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

/// Γ, Γ₂, Γ₃ of a polynomial at one point.
pub fn gamma_values(diff: &Diffusion1D, f: &RPoly, x: f64) -> Result<GammaValues> {
    Ok(GammaValues {
        gamma1: iterated_gamma(diff, 1, f)?.eval_f64(x),
        gamma2: iterated_gamma(diff, 2, f)?.eval_f64(x),
        gamma3: iterated_gamma(diff, 3, f)?.eval_f64(x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ou_on_x_squared() {
        let ou = Diffusion1D::ornstein_uhlenbeck();
        let f = RPoly::from_ints(&[0, 0, 1]);
        assert_eq!(iterated_gamma(&ou, 1, &f).unwrap(), RPoly::from_ints(&[0, 0, 4]));
        assert_eq!(iterated_gamma(&ou, 2, &f).unwrap(), RPoly::from_ints(&[4, 0, 4]));
        assert_eq!(iterated_gamma(&ou, 3, &f).unwrap(), RPoly::from_ints(&[12, 0, 4]));
    }

    #[test]
    fn ou_closed_forms_on_basis() {
        let ou = Diffusion1D::ornstein_uhlenbeck();
        for deg in 0..=6 {
            let mut c = vec![0; deg + 1];
            c[deg] = 1;
            let f = RPoly::from_ints(&c);
            let g1 = iterated_gamma(&ou, 1, &f).unwrap();
            let g2 = iterated_gamma(&ou, 2, &f).unwrap();
            let g3 = iterated_gamma(&ou, 3, &f).unwrap();
            let (d2, d3) = (f.nth_derivative(2), f.nth_derivative(3));
            assert_eq!(g2, d2.mul(&d2).add(&g1));
            assert_eq!(g3, d3.mul(&d3).add(&g2.scale(&rat(3, 1))).sub(&g1.scale(&rat(2, 1))));
        }
    }

    #[test]
    fn laguerre_and_jacobi_examples() {
        let p = 3.0;
        let l = Diffusion1D::laguerre(p).unwrap();
        let x = RPoly::x();
        assert_eq!(iterated_gamma(&l, 2, &x).unwrap(), RPoly::from_f64(&[0.5 * p, 0.5]).unwrap());
        let j = Diffusion1D::jacobi();
        assert_eq!(iterated_gamma(&j, 2, &x).unwrap(), RPoly::from_ints(&[1, 0, 1]));
    }

    #[test]
    fn jacobi_factorization() {
        let j = Diffusion1D::jacobi();
        let f = RPoly::from_ints(&[3, -1, 4, 1, -5, 9, -2]);
        let gap = iterated_gamma(&j, 3, &f).unwrap().sub(&iterated_gamma(&j, 2, &f).unwrap());
        assert_eq!(gap, jacobi_gamma3_gap(&f));
    }

    #[test]
    fn callable_matches_polynomial() {
        let l = Diffusion1D::laguerre(2.0).unwrap();
        let p = RPoly::from_ints(&[1, -2, 0, 1]);
        let q = p.clone();
        let c = SymbolicFn::Callable { f: Arc::new(move |x| q.eval_f64(x)), order: 6 };
        for n in 1..=3 {
            for x in [0.3, 1.0, 2.5] {
                let exact = iterated_gamma_at(&l, n, &SymbolicFn::Poly(p.clone()), x).unwrap();
                let approx = iterated_gamma_at(&l, n, &c, x).unwrap();
                assert!((exact - approx).abs() < 1e-6 * exact.abs().max(1.0), "n={n} x={x}: {exact} vs {approx}");
            }
        }
        let sin = SymbolicFn::Callable { f: Arc::new(f64::sin), order: 2 };
        let ou = Diffusion1D::ornstein_uhlenbeck();
        let g2 = iterated_gamma_at(&ou, 2, &sin, 0.7).unwrap();
        assert!((g2 - (0.7f64.sin().powi(2) + 0.7f64.cos().powi(2))).abs() < 1e-5);
        assert!(iterated_gamma_at(&ou, 3, &sin, 0.7).is_err());
    }
}
