use serde::{Deserialize, Serialize};

use super::matrix::GammaMatrix;
use super::poly::{carre_du_champ, common_dim, eigen_check, ou_apply, PolyFunctional, MAX_EXACT_DEGREE};
use super::tails::{diagnose, estimate, gaussian_values, TailDiagnostics};
use crate::error::{Error, Result};
use crate::inequalities::Psi;
use crate::montecarlo::MCEstimate;

/// κ(α) = (2 + α)/(2(4 + 3α)).
pub fn kappa(alpha: f64) -> f64 {
    (2.0 + alpha) / (2.0 * (4.0 + 3.0 * alpha))
}

fn exact(value: f64, seed: u64) -> MCEstimate {
    MCEstimate { value, std_error: 0.0, samples: 0, seed }
}

/// Gaussian mean of a polynomial: the moment formula when the degree allows
/// it (reported with zero SE and zero samples), Monte Carlo otherwise.
pub fn poly_mean(f: &PolyFunctional, samples: usize, seed: u64) -> MCEstimate {
    match f.gaussian_mean() {
        Some(m) => exact(m, seed),
        None => estimate(&gaussian_values(f.dim(), samples, seed, |x| f.eval(x)), seed),
    }
}

/// Gaussian variance of a polynomial, exact when deg f² ≤ 12.
pub fn poly_variance(f: &PolyFunctional, samples: usize, seed: u64) -> MCEstimate {
    if 2 * f.degree() <= MAX_EXACT_DEGREE {
        let m = f.gaussian_mean().unwrap_or(f64::NAN);
        let m2 = f.mul(f).gaussian_mean().unwrap_or(f64::NAN);
        return exact((m2 - m * m).max(0.0), seed);
    }
    let v = gaussian_values(f.dim(), samples, seed, |x| f.eval(x));
    let m = estimate(&v, seed).value;
    let n = v.len() as f64;
    let dev: Vec<f64> = v.iter().map(|y| (y - m) * (y - m) * n / (n - 1.0)).collect();
    estimate(&dev, seed)
}

fn is_exact(e: &MCEstimate) -> bool {
    e.samples == 0
}

fn combine(value: f64, parts: &[MCEstimate], seed: u64, samples: usize) -> MCEstimate {
    if parts.iter().all(is_exact) {
        return exact(value, seed);
    }
    let se = parts.iter().map(|p| p.std_error * p.std_error).sum::<f64>().sqrt();
    MCEstimate { value, std_error: se, samples, seed }
}

/// V² = Σ λ_i^{-2} Var Γ(F_i, F_j) + ‖C - Id‖²_HS for an eigenfunction vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSteinBound {
    pub lambdas: Vec<f64>,
    /// Row-major covariance E[F_i F_j].
    pub covariance: Vec<f64>,
    pub v2: MCEstimate,
    /// Every moment came from the moment formula.
    pub exact: bool,
}

pub fn eigenvalues(fs: &[PolyFunctional]) -> Result<Vec<f64>> {
    fs.iter()
        .enumerate()
        .map(|(i, f)| eigen_check(f).ok_or_else(|| Error::Precondition(format!("F{} = {f} is not an eigenfunction of -L", i + 1))))
        .collect()
}

/// SE terms of the MC path are combined as if independent.
pub fn eigen_stein_bound(fs: &[PolyFunctional], samples: usize, seed: u64) -> Result<EigenSteinBound> {
    let fs = common_dim(fs);
    let lambdas = eigenvalues(&fs)?;
    let d = fs.len();
    let g = GammaMatrix::of(&fs)?;
    let mut parts = Vec::new();
    let mut covariance = vec![0.0; d * d];
    let mut v2 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let var = poly_variance(g.get(i, j), samples, seed).scaled(lambdas[i].powi(-2));
            let c = poly_mean(&fs[i].mul(&fs[j]), samples, seed);
            covariance[i * d + j] = c.value;
            let dc = c.value - if i == j { 1.0 } else { 0.0 };
            v2 += var.value + dc * dc;
            parts.push(var);
            parts.push(c.scaled(2.0 * dc));
        }
    }
    let v2 = combine(v2, &parts, seed, samples);
    Ok(EigenSteinBound { lambdas, covariance, exact: is_exact(&v2), v2 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourthMomentReport {
    pub k: f64,
    pub second_moment: MCEstimate,
    pub fourth_moment: MCEstimate,
    pub v2: MCEstimate,
    /// (E F² - 1)² + (k - 1)/(3k) (E F⁴ - 3 (E F²)²)
    pub bound: MCEstimate,
    /// V² ≤ bound up to 3 combined SE (1e-12 relative on the exact path).
    pub holds: bool,
}

pub fn fourth_moment_bound(f: &PolyFunctional, k: f64, samples: usize, seed: u64) -> Result<FourthMomentReport> {
    match eigen_check(f) {
        Some(l) if (l - k).abs() <= 1e-9 * k.max(1.0) => {}
        Some(l) => return Err(Error::Precondition(format!("{f} has eigenvalue {l}, not {k}"))),
        None => return Err(Error::Precondition(format!("{f} is not an eigenfunction of -L"))),
    }
    let v2 = eigen_stein_bound(std::slice::from_ref(f), samples, seed)?.v2;
    let f2 = f.mul(f);
    let m2 = poly_mean(&f2, samples, seed);
    let m4 = poly_mean(&f2.mul(&f2), samples, seed);
    let c = (k - 1.0) / (3.0 * k);
    let value = (m2.value - 1.0).powi(2) + c * (m4.value - 3.0 * m2.value * m2.value);
    let d2 = 2.0 * (m2.value - 1.0) - 6.0 * c * m2.value;
    let bound = combine(value, &[m2.scaled(d2), m4.scaled(c)], seed, samples);
    let slack = if is_exact(&v2) && is_exact(&bound) {
        1e-12 * bound.value.abs().max(1.0)
    } else {
        3.0 * v2.std_error.hypot(bound.std_error)
    };
    let holds = v2.value <= bound.value + slack;
    Ok(FourthMomentReport { k, second_moment: m2, fourth_moment: m4, v2, bound, holds })
}

/// Exact numerators of U = Γ̃⁻¹LF + V + F: U_j = N_j/det² + F_j.
#[derive(Debug, Clone, PartialEq)]
pub struct UFields {
    pub f: Vec<PolyFunctional>,
    pub lf: Vec<PolyFunctional>,
    pub det: PolyFunctional,
    pub adj: Vec<PolyFunctional>,
    /// Σ_i Γ(F_i, adj_ij)
    pub v1: Vec<PolyFunctional>,
    /// Σ_i adj_ij Γ(F_i, det)
    pub v2: Vec<PolyFunctional>,
    pub numerators: Vec<PolyFunctional>,
}

impl UFields {
    pub fn new(fs: &[PolyFunctional]) -> Result<Self> {
        let f = common_dim(fs);
        let d = f.len();
        let g = GammaMatrix::of(&f)?;
        let det = g.det();
        let scale = (0..d).map(|i| g.get(i, i).max_abs()).fold(0.0, f64::max).powi(d as i32);
        if det.is_negligible(scale.max(1e-300), 1e-12) {
            return Err(Error::Precondition("the Γ matrix of F is singular identically".into()));
        }
        let adj = g.adjugate();
        let lf: Vec<PolyFunctional> = f.iter().map(ou_apply).collect();
        let n = f[0].dim();
        let mut v1 = vec![PolyFunctional::zero(n); d];
        let mut v2 = vec![PolyFunctional::zero(n); d];
        let mut numerators = Vec::with_capacity(d);
        for j in 0..d {
            let mut a_lf = PolyFunctional::zero(n);
            for i in 0..d {
                v1[j] = v1[j].add(&carre_du_champ(&f[i], &adj[i * d + j]));
                v2[j] = v2[j].add(&adj[i * d + j].mul(&carre_du_champ(&f[i], &det)));
                a_lf = a_lf.add(&adj[j * d + i].mul(&lf[i]));
            }
            numerators.push(det.mul(&a_lf).add(&det.mul(&v1[j])).sub(&v2[j]));
        }
        Ok(UFields { f, lf, det, adj, v1, v2, numerators })
    }

    pub fn u_squared(&self, x: &[f64]) -> f64 {
        let det = self.det.eval(x);
        let d2 = det * det;
        self.numerators.iter().zip(&self.f).map(|(nj, fj)| (nj.eval(x) / d2 + fj.eval(x)).powi(2)).sum()
    }

    /// |adj·LF| + |V1| + |V2| + |F|.
    pub fn a_integrand(&self, x: &[f64]) -> f64 {
        let d = self.f.len();
        let lf: Vec<f64> = self.lf.iter().map(|p| p.eval(x)).collect();
        let adj: Vec<f64> = self.adj.iter().map(|p| p.eval(x)).collect();
        let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|t| t * t).sum::<f64>().sqrt();
        let a = norm(&mut (0..d).map(|j| (0..d).map(|i| adj[j * d + i] * lf[i]).sum::<f64>()));
        let b = norm(&mut self.v1.iter().map(|p| p.eval(x)));
        let c = norm(&mut self.v2.iter().map(|p| p.eval(x)));
        let e = norm(&mut self.f.iter().map(|p| p.eval(x)));
        (a + b + c + e).powi(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherUReport {
    /// ∫|U|² dμ, an upper bound on I(ν_F | γ).
    pub estimate: MCEstimate,
    pub diagnostics: TailDiagnostics,
    pub divergent: bool,
    pub det: String,
    pub numerators: Vec<String>,
}

pub fn fisher_u_bound(fs: &[PolyFunctional], samples: usize, seed: u64) -> Result<FisherUReport> {
    let u = UFields::new(fs)?;
    let n = u.f[0].dim();
    let vals = gaussian_values(n, samples, seed, |x| u.u_squared(x));
    let diagnostics = diagnose(&vals, seed);
    Ok(FisherUReport {
        estimate: estimate(&vals, seed),
        divergent: diagnostics.divergent || vals.iter().any(|v| !v.is_finite()),
        diagnostics,
        det: u.det.to_string(),
        numerators: u.numerators.iter().map(ToString::to_string).collect(),
    })
}

/// Where the S² that enters the entropic bound came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum S2Source {
    Supplied,
    /// V² for an eigenfunction vector.
    EigenUpperBound,
    /// E[(Γ(F)/(λF) - 1)²], the Jensen bound in the gamma picture.
    JensenUpperBound,
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyBoundReport {
    pub alpha: f64,
    pub kappa: f64,
    pub a_f: MCEstimate,
    pub b_f: MCEstimate,
    pub b_diagnostics: TailDiagnostics,
    pub s2: Option<MCEstimate>,
    pub s2_source: S2Source,
    /// r ↦ rΨ(c/r) is nondecreasing on (0, ∞), so an upper bound on S² may
    /// replace S² in the bound.
    pub substitution_monotone: bool,
    pub bound: Option<MCEstimate>,
    /// Samples dropped from A_F because F < 1e-12 (gamma case only).
    pub rejected: usize,
    pub divergent: bool,
    pub note: String,
}

/// S²/(2(1 - 4κ)) Ψ(2M/S²), with S² = 0 giving 0.
fn assemble(s2: &MCEstimate, m: f64, dm: f64, kap: f64, seed: u64, samples: usize, parts: &[MCEstimate]) -> MCEstimate {
    let k = 1.0 / (2.0 * (1.0 - 4.0 * kap));
    if s2.value <= 0.0 {
        return exact(0.0, seed);
    }
    let r = 2.0 * m / s2.value;
    let value = k * s2.value * Psi::eval(r);
    // first-order propagation: d/dS² and d/dM of S²Ψ(2M/S²)
    let dpsi = if r >= 1.0 { 1.0 / r } else { 1.0 };
    let ds2 = k * (Psi::eval(r) - r * dpsi);
    let dmm = k * 2.0 * dpsi;
    let mut all = vec![s2.scaled(ds2)];
    all.extend(parts.iter().map(|p| p.scaled(dmm * dm)));
    combine(value, &all, seed, samples)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("α must be positive, got {alpha}")))
    }
}

/// Normal entropic bound H(ν_F | γ) ≤ S²/(2(1 - 4κ)) Ψ(2(A_F + d(B_F + 1))/S²).
/// Without `s2`, eigenfunction vectors use V²; otherwise only the
/// ingredients are reported.
pub fn entropy_bound_normal(fs: &[PolyFunctional], alpha: f64, s2: Option<f64>, samples: usize, seed: u64) -> Result<EntropyBoundReport> {
    check_alpha(alpha)?;
    let u = UFields::new(fs)?;
    let (n, d) = (u.f[0].dim(), u.f.len());
    let a_f = estimate(&gaussian_values(n, samples, seed, |x| u.a_integrand(x)), seed);
    let b_vals = gaussian_values(n, samples, seed, |x| u.det.eval(x).powf(-alpha));
    let b_diagnostics = diagnose(&b_vals, seed);
    let b_f = estimate(&b_vals, seed);
    let (s2, s2_source) = match s2 {
        Some(v) if v >= 0.0 => (Some(exact(v, seed)), S2Source::Supplied),
        Some(v) => return Err(Error::InvalidParameter(format!("S² must be nonnegative, got {v}"))),
        None => match eigen_stein_bound(&u.f, samples, seed) {
            Ok(e) => (Some(e.v2), S2Source::EigenUpperBound),
            Err(_) => (None, S2Source::Unavailable),
        },
    };
    let kap = kappa(alpha);
    let m = a_f.value + d as f64 * (b_f.value + 1.0);
    let bound = s2.as_ref().map(|s| assemble(s, m, 1.0, kap, seed, samples, &[a_f, b_f.scaled(d as f64)]));
    let divergent = b_diagnostics.divergent || !b_f.value.is_finite() || !a_f.value.is_finite();
    let note = match s2_source {
        S2Source::Unavailable => "F is not an eigenfunction vector and no S² was supplied; ingredients only".into(),
        _ => String::new(),
    };
    Ok(EntropyBoundReport {
        alpha,
        kappa: kap,
        a_f,
        b_f,
        b_diagnostics,
        s2,
        s2_source,
        substitution_monotone: true,
        bound,
        rejected: 0,
        divergent,
        note,
    })
}

/// Samples with F below this are dropped from A_F and the Jensen bound.
pub const GAMMA_REJECT: f64 = 1e-12;

/// Gamma entropic bound for a nonnegative F against γ_p:
/// S²/(2(1 - 4κ)) Ψ(2(A_F + B_F + 1)/S²).
pub fn entropy_bound_gamma(f: &PolyFunctional, p: f64, alpha: f64, samples: usize, seed: u64) -> Result<EntropyBoundReport> {
    if !(p >= 0.5) {
        return Err(Error::Precondition(format!("the gamma entropic bound requires p ≥ ½, got p = {p}")));
    }
    check_alpha(alpha)?;
    let n = f.dim();
    let lf = ou_apply(f);
    let g = carre_du_champ(f, f);
    let ggg = carre_du_champ(f, &g);
    let fv = gaussian_values(n, samples, seed, |x| f.eval(x));
    if let Some(x) = fv.iter().find(|v| **v < -GAMMA_REJECT) {
        return Err(Error::Precondition(format!("F must be nonnegative; a sample gave F = {x}")));
    }
    let rejected = fv.iter().filter(|v| **v < GAMMA_REJECT).count();
    let a_vals: Vec<f64> = gaussian_values(n, samples, seed, |x| {
        let fx = f.eval(x);
        if fx < GAMMA_REJECT {
            return f64::NAN;
        }
        let t = fx * lf.eval(x).abs() + g.eval(x) + fx * ggg.eval(x).abs() + p + fx;
        t * t / fx
    })
    .into_iter()
    .filter(|v| !v.is_nan())
    .collect();
    let a_f = estimate(&a_vals, seed);
    let b_vals = gaussian_values(n, samples, seed, |x| g.eval(x).powf(-alpha));
    let b_diagnostics = diagnose(&b_vals, seed);
    let b_f = estimate(&b_vals, seed);

    // S² ≤ E[(Γ(F)/(λF) - 1)²] when F - p is an eigenfunction and E F = p
    let mean = poly_mean(f, samples, seed);
    let centered = f.sub(&PolyFunctional::constant(n, mean.value));
    let mean_ok = if is_exact(&mean) {
        (mean.value - p).abs() <= 1e-9 * p.max(1.0)
    } else {
        (mean.value - p).abs() <= 3.0 * mean.std_error
    };
    let (s2, s2_source, note) = match (eigen_check(&centered), mean_ok) {
        (Some(lambda), true) => {
            let v: Vec<f64> = gaussian_values(n, samples, seed, |x| {
                let fx = f.eval(x);
                if fx < GAMMA_REJECT { f64::NAN } else { (g.eval(x) / (lambda * fx) - 1.0).powi(2) }
            })
            .into_iter()
            .filter(|v| !v.is_nan())
            .collect();
            (Some(estimate(&v, seed)), S2Source::JensenUpperBound, String::new())
        }
        (None, _) => (None, S2Source::Unavailable, "F - E F is not an eigenfunction; ingredients only".to_string()),
        (Some(_), false) => (None, S2Source::Unavailable, format!("E F = {} differs from p = {p}; ingredients only", mean.value)),
    };
    let kap = kappa(alpha);
    let m = a_f.value + b_f.value + 1.0;
    let bound = s2.as_ref().map(|s| assemble(s, m, 1.0, kap, seed, samples, &[a_f, b_f]));
    let divergent = b_diagnostics.divergent || !b_f.value.is_finite() || !a_f.value.is_finite();
    Ok(EntropyBoundReport {
        alpha,
        kappa: kap,
        a_f,
        b_f,
        b_diagnostics,
        s2,
        s2_source,
        substitution_monotone: true,
        bound,
        rejected,
        divergent,
        note,
    })
}
