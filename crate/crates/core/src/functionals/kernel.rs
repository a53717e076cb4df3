use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::pearson::check_tau_explosion;
use crate::measures::{Family, PearsonParams, Reference1D, TargetDensity};
use crate::quadrature::{integrate_vec, AdaptiveOptions, Interval};

/// Where a kernel came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelProvenance {
    ClosedForm1d,
    PearsonQuadratic,
    Constant,
    Evolved,
    EigenBound,
}

/// Number of grid points of the tabulated tail integral.
pub const KERNEL_GRID: usize = 2048;

/// Densities below this are treated as outside the usable support.
pub const DENSITY_FLOOR: f64 = 1e-300;

#[derive(Clone)]
enum Repr {
    Constant(f64),
    /// αx² + βx + γ
    Quadratic { alpha: f64, beta: f64, gamma: f64 },
    Mixture { n: f64, a: f64 },
    Reference(Reference1D),
    Table(Arc<KernelTable>),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A scalar Stein kernel τ of a 1D target relative to the generator
/// L f = a f'' + b f' of a reference measure: ∫ -b φ' dν = ∫ τ φ'' dν.
#[derive(Clone)]
pub struct SteinKernel {
    provenance: KernelProvenance,
    reference: Reference1D,
    repr: Repr,
}

impl fmt::Debug for SteinKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let repr = match &self.repr {
            Repr::Constant(c) => format!("constant {c}"),
            Repr::Quadratic { alpha, beta, gamma } => format!("{alpha} x² + {beta} x + {gamma}"),
            Repr::Mixture { n, a } => format!("mixture(n={n}, a={a})"),
            Repr::Reference(r) => format!("diffusion of {}", r.name()),
            Repr::Table(t) => format!("table({} nodes)", t.xs.len()),
            Repr::Function(_) => "function".into(),
        };
        f.debug_struct("SteinKernel")
            .field("provenance", &self.provenance)
            .field("reference", &self.reference.name())
            .field("repr", &repr)
            .finish()
    }
}

impl SteinKernel {
    pub fn constant(c: f64, reference: Reference1D) -> Self {
        SteinKernel { provenance: KernelProvenance::Constant, reference, repr: Repr::Constant(c) }
    }

    pub fn quadratic(alpha: f64, beta: f64, gamma: f64, provenance: KernelProvenance, reference: Reference1D) -> Self {
        SteinKernel { provenance, reference, repr: Repr::Quadratic { alpha, beta, gamma } }
    }

    /// Wraps an arbitrary function, e.g. the kernel of an evolved target.
    pub fn from_fn<F>(f: F, provenance: KernelProvenance, reference: Reference1D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        SteinKernel { provenance, reference, repr: Repr::Function(Arc::new(f)) }
    }

    pub fn provenance(&self) -> KernelProvenance {
        self.provenance
    }

    pub fn reference(&self) -> &Reference1D {
        &self.reference
    }

    /// Constant value, if the kernel is constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self.repr {
            Repr::Constant(c) => Some(c),
            Repr::Quadratic { alpha: 0.0, beta: 0.0, gamma } => Some(gamma),
            _ => None,
        }
    }

    /// Quadratic coefficients (α, β, γ), if the kernel is quadratic.
    pub fn as_quadratic(&self) -> Option<(f64, f64, f64)> {
        match self.repr {
            Repr::Constant(c) => Some((0.0, 0.0, c)),
            Repr::Quadratic { alpha, beta, gamma } => Some((alpha, beta, gamma)),
            _ => None,
        }
    }

    /// τ(x); NaN where the target density is below [`DENSITY_FLOOR`].
    pub fn eval(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Constant(c) => *c,
            Repr::Quadratic { alpha, beta, gamma } => (alpha * x + beta) * x + gamma,
            Repr::Mixture { n, a } => mixture_kernel(*n, *a, x),
            Repr::Reference(r) => r.diffusion(x),
            Repr::Table(t) => t.eval(x),
            Repr::Function(f) => f(x),
        }
    }

    pub fn try_eval(&self, x: f64) -> Result<f64> {
        let v = self.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::OutsideSupport { x })
        }
    }

    /// τ/a, the kernel normalized by the reference diffusion coefficient.
    pub fn normalized(&self, x: f64) -> f64 {
        match (&self.repr, &self.reference) {
            (Repr::Reference(_), _) => 1.0,
            (_, Reference1D::Gaussian { var }) => self.eval(x) / var,
            _ => self.eval(x) / self.reference.diffusion(x),
        }
    }
}

/// [(1-a)φ(x) + (a/n)φ(nx)] / [(1-a)φ(x) + a n φ(nx)] in log space.
fn mixture_kernel(n: f64, a: f64, x: f64) -> f64 {
    let l1 = (1.0 - a).ln() - 0.5 * x * x;
    let l2 = a.ln() - 0.5 * (n * x) * (n * x);
    let m = l1.max(l2);
    let (w1, w2) = ((l1 - m).exp(), (l2 - m).exp());
    (w1 + w2 / n) / (w1 + w2 * n)
}

/// Tail integral τρ tabulated on a grid uniform in the mapped variable of
/// the target's integration domain, with cubic Hermite interpolation using
/// τ' = b - τ (log ρ)'.
struct KernelTable {
    target: TargetDensity,
    reference: Reference1D,
    iv: Interval,
    t0: f64,
    h: f64,
    xs: Vec<f64>,
    tau: Vec<f64>,
    dtau_dt: Vec<f64>,
    drift_zero: f64,
}

fn tail_opts() -> AdaptiveOptions {
    AdaptiveOptions { abs_tol: 1e-300, rel_tol: 1e-12, max_segments: 400, initial_pieces: 1 }
}

impl KernelTable {
    fn build(target: &TargetDensity) -> Result<Self> {
        let reference = target.reference().clone();
        let iv = target.interval();
        let (t0, t1) = iv.t_bounds();
        let h = (t1 - t0) / (KERNEL_GRID + 1) as f64;
        let xs: Vec<f64> = (1..=KERNEL_GRID).map(|k| iv.x_of_t(t0 + h * k as f64)).collect();
        let drift_zero = drift_zero(&reference);
        let (lo, hi) = target.support();
        // panel masses of bρ between consecutive nodes, plus the two end pieces
        let mut edges = Vec::with_capacity(KERNEL_GRID + 2);
        edges.push(lo);
        edges.extend_from_slice(&xs);
        edges.push(hi);
        let bp = target.breakpoints().to_vec();
        let panel = |a: f64, b: f64| -> Result<f64> {
            let piv = Interval::new(a, b).with_scale(iv.scale).with_breakpoints(&bp);
            let r = integrate_vec(
                |y| {
                    let d = target.density(y);
                    if d == 0.0 { [0.0] } else { [reference.drift(y) * d] }
                },
                &piv,
                &tail_opts(),
            )?;
            Ok(r.value[0])
        };
        let panels: Vec<f64> = crate::parallel::par_map_range(edges.len() - 1, |k| panel(edges[k], edges[k + 1]))
            .into_iter()
            .collect::<Result<_>>()?;
        // τρ(x_k) = Σ_{panels left of x_k} below the drift zero, -Σ_{right} above it
        let m = xs.len();
        let mut left = vec![0.0; m];
        let mut acc = 0.0;
        for k in 0..m {
            acc += panels[k];
            left[k] = acc;
        }
        let mut right = vec![0.0; m];
        let mut acc = 0.0;
        for k in (0..m).rev() {
            acc += panels[k + 1];
            right[k] = -acc;
        }
        let mut tau = vec![f64::NAN; m];
        let mut dtau_dt = vec![f64::NAN; m];
        for k in 0..m {
            let x = xs[k];
            let d = target.density(x);
            if !(d >= DENSITY_FLOOR) || !x.is_finite() {
                continue;
            }
            let mass = if x <= drift_zero { left[k] } else { right[k] };
            let t = mass / d;
            tau[k] = t;
            let dt = reference.drift(x) - t * target.dlog_density(x);
            dtau_dt[k] = dt * iv.dx_dt(t0 + h * (k + 1) as f64);
        }
        Ok(KernelTable { target: target.clone(), reference, iv, t0, h, xs, tau, dtau_dt, drift_zero })
    }

    /// τ at x by direct tail quadrature from the side of the drift zero.
    fn direct(&self, x: f64) -> f64 {
        let d = self.target.density(x);
        if !(d >= DENSITY_FLOOR) {
            return f64::NAN;
        }
        let (lo, hi) = self.target.support();
        let (a, b, sign) = if x <= self.drift_zero { (lo, x, 1.0) } else { (x, hi, -1.0) };
        let piv = Interval::new(a, b).with_scale(self.iv.scale).with_breakpoints(self.target.breakpoints());
        let r = integrate_vec(
            |y| {
                let dy = self.target.density(y);
                if dy == 0.0 { [0.0] } else { [self.reference.drift(y) * dy] }
            },
            &piv,
            &tail_opts(),
        );
        match r {
            Ok(r) => sign * r.value[0] / d,
            Err(_) => f64::NAN,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.target.support();
        if !(x >= lo && x <= hi) {
            return f64::NAN;
        }
        let t = self.iv.t_of_x(x);
        let s = (t - self.t0) / self.h - 1.0;
        if !(s >= 0.0) || s >= (self.xs.len() - 1) as f64 {
            return self.direct(x);
        }
        let k = s.floor() as usize;
        let u = s - k as f64;
        let (y0, y1) = (self.tau[k], self.tau[k + 1]);
        let (m0, m1) = (self.dtau_dt[k] * self.h, self.dtau_dt[k + 1] * self.h);
        if !(y0.is_finite() && y1.is_finite() && m0.is_finite() && m1.is_finite()) {
            return self.direct(x);
        }
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * m1
    }
}

fn drift_zero(r: &Reference1D) -> f64 {
    match r {
        Reference1D::Gaussian { .. } | Reference1D::Jacobi => 0.0,
        Reference1D::Gamma { p, .. } => *p,
        Reference1D::LogConcave { mode, .. } => *mode,
    }
}

/// Stein kernel of a 1D target relative to its reference generator:
/// τρ(x) = ∫_lo^x bρ = -∫_x^hi bρ. Closed forms for the built-in families,
/// a quadratic for Pearson targets, a tabulated tail integral otherwise.
pub fn stein_kernel_1d(target: &TargetDensity) -> Result<SteinKernel> {
    let reference = target.reference().clone();
    let gaussian_ref = matches!(reference, Reference1D::Gaussian { .. });
    let closed = |repr: Repr| Ok(SteinKernel { provenance: KernelProvenance::ClosedForm1d, reference: reference.clone(), repr });
    match target.family() {
        Family::Reference => {
            return match reference {
                Reference1D::Gaussian { var } => Ok(SteinKernel::constant(var, reference.clone())),
                _ => closed(Repr::Reference(reference.clone())),
            }
        }
        Family::Normal { var } if gaussian_ref => return Ok(SteinKernel::constant(*var, reference.clone())),
        Family::ShiftedGamma { p, .. } if gaussian_ref => {
            return closed(Repr::Quadratic { alpha: 0.0, beta: 1.0, gamma: *p });
        }
        Family::Uniform { c } if gaussian_ref => {
            return closed(Repr::Quadratic { alpha: -0.5, beta: 0.0, gamma: 0.5 * c * c });
        }
        Family::Mixture { n, a } if gaussian_ref => return closed(Repr::Mixture { n: *n, a: *a }),
        Family::StudentLike { alpha, .. } if gaussian_ref => {
            let s = 1.0 / (2.0 * alpha - 2.0);
            return closed(Repr::Quadratic { alpha: s, beta: 0.0, gamma: s });
        }
        _ => {}
    }
    if gaussian_ref {
        if let Some((params, shift)) = target.pearson_params() {
            let (a, b, g) = params.kernel_coefficients(shift)?;
            return Ok(SteinKernel::quadratic(a, b, g, KernelProvenance::PearsonQuadratic, reference));
        }
    }
    let table = KernelTable::build(target)?;
    Ok(SteinKernel { provenance: KernelProvenance::ClosedForm1d, reference, repr: Repr::Table(Arc::new(table)) })
}

/// Quadratic kernel τ = αx² + βx + γ of the centered Pearson solution,
/// after checking that ∫ y/τ(y) dy diverges at both ends of the support.
pub fn stein_kernel_pearson(params: &PearsonParams) -> Result<SteinKernel> {
    let target = TargetDensity::pearson(*params)?;
    let (_, shift) = target.pearson_params().expect("pearson target keeps its parameters");
    let (a, b, g) = params.kernel_coefficients(shift)?;
    let (lo, hi) = target.support();
    check_tau_explosion(a, b, g, lo, hi)?;
    Ok(SteinKernel::quadratic(a, b, g, KernelProvenance::PearsonQuadratic, Reference1D::standard_gaussian()))
}

/// max over the test set of |∫ -b φ' dν - ∫ τ φ'' dν|, φ(x) = x^k for k in
/// `degrees`, scaled by 1 + ∫|b φ'| dν.
pub fn stein_identity_residual(target: &TargetDensity, kernel: &SteinKernel, degrees: &[i32]) -> Result<f64> {
    let r = target.reference();
    let mut worst = 0.0f64;
    for &k in degrees {
        let kf = k as f64;
        let v = integrate_vec(
            |x| {
                let d = target.density(x);
                if d < DENSITY_FLOOR {
                    return [0.0; 3];
                }
                let dphi = kf * x.powi(k - 1);
                let ddphi = if k >= 2 { kf * (kf - 1.0) * x.powi(k - 2) } else { 0.0 };
                let lhs = -r.drift(x) * dphi * d;
                [lhs, kernel.eval(x) * ddphi * d, lhs.abs()]
            },
            &target.interval(),
            &AdaptiveOptions::default(),
        )?;
        worst = worst.max((v.value[0] - v.value[1]).abs() / (1.0 + v.value[2]));
    }
    Ok(worst)
}
