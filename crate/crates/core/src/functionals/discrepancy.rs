use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kernel::{SteinKernel, DENSITY_FLOOR};
use super::{FunctionalKind, FunctionalValue};
use crate::error::{Error, Result};
use crate::measures::{ProductTarget, Reference1D, TargetDensity};
use crate::quadrature::{integrate_vec, AdaptiveOptions};

/// Matrix norm inside S_p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// (∫ ‖a^{-1/2} τ a^{-1/2} - Id‖_HS^p dν)^{1/p}
    #[default]
    Hs,
    /// (Σ_ij ∫ |τ_ij - δ_ij|^p dν)^{1/p}
    Entrywise,
}

fn opts() -> AdaptiveOptions {
    crate::quadrature::overrides().adapt(AdaptiveOptions { abs_tol: 1e-14, rel_tol: 1e-11, max_segments: 4000, initial_pieces: 4 })
}

/// S_p(ν|μ) for a 1D target; p = 2 gives the Stein discrepancy S. In one
/// dimension the two norms coincide.
pub fn stein_discrepancy(target: &TargetDensity, kernel: &SteinKernel, p: f64, _norm: NormKind) -> Result<FunctionalValue> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("S_p needs p ≥ 1, got {p}")));
    }
    let kind = if p == 2.0 { FunctionalKind::S } else { FunctionalKind::Sp };
    if let Some(c) = kernel.as_constant() {
        if let Reference1D::Gaussian { var } = kernel.reference() {
            let v = (c / var - 1.0).abs();
            return Ok(FunctionalValue::finite(kind, v, 0.0).with_order(p));
        }
    }
    let r = integrate_vec(
        |x| {
            let d = target.density(x);
            if d < DENSITY_FLOOR {
                return [0.0];
            }
            let t = kernel.normalized(x);
            if !t.is_finite() {
                return [0.0];
            }
            [(t - 1.0).abs().powf(p) * d]
        },
        &target.interval(),
        &opts(),
    );
    match r {
        Ok(r) if r.converged && r.value[0].is_finite() => {
            let m = r.value[0].max(0.0);
            let v = m.powf(1.0 / p);
            let err = if m > 0.0 { v * r.error[0] / (p * m) } else { r.error[0].powf(1.0 / p) };
            Ok(FunctionalValue::finite(kind, v, err).with_order(p))
        }
        Ok(_) | Err(Error::NonFinite { .. }) => Ok(FunctionalValue { order: Some(p), ..FunctionalValue::divergent(kind) }),
        Err(e) => Err(e),
    }
}

/// S_p of a product target with diagonal kernel diag(τ_i(x_i)) against a
/// Gaussian reference with covariance `cov`: the normalized kernel is
/// C^{-1/2} τ C^{-1/2}. Evaluated by the tensor rule, so d ≤ 3.
pub fn stein_discrepancy_product(
    target: &ProductTarget,
    kernels: &[SteinKernel],
    cov: &DMatrix<f64>,
    p: f64,
    norm: NormKind,
) -> Result<FunctionalValue> {
    let d = target.dimension();
    if kernels.len() != d || cov.nrows() != d {
        return Err(Error::Dimension("kernels, covariance and target dimension differ".into()));
    }
    let kind = if p == 2.0 { FunctionalKind::S } else { FunctionalKind::Sp };
    let sym = cov.clone().symmetric_eigen();
    if sym.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidParameter("covariance must be positive definite".into()));
    }
    let inv_sqrt = &sym.eigenvectors
        * DMatrix::from_diagonal(&sym.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * sym.eigenvectors.transpose();
    let ivs: Vec<_> = target.factors().iter().map(|f| f.interval()).collect();
    let integrand = |x: &[f64]| -> f64 {
        let dens = target.density(x);
        if dens < DENSITY_FLOOR {
            return 0.0;
        }
        let tau = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d, (0..d).map(|i| kernels[i].eval(x[i]))));
        let m = match norm {
            NormKind::Hs => &inv_sqrt * tau * &inv_sqrt - DMatrix::identity(d, d),
            NormKind::Entrywise => tau - DMatrix::identity(d, d),
        };
        let v = match norm {
            NormKind::Hs => m.norm().powf(p),
            NormKind::Entrywise => m.iter().map(|e| e.abs().powf(p)).sum(),
        };
        if v.is_finite() { v * dens } else { 0.0 }
    };
    let scheme = crate::quadrature::IntegrationScheme::adaptive().with_tolerances(1e-12, 1e-9);
    let e = crate::quadrature::integrate_product(integrand, &ivs, &scheme)?;
    if !e.converged {
        return Ok(FunctionalValue { order: Some(p), ..FunctionalValue::divergent(kind) });
    }
    Ok(FunctionalValue::finite(kind, e.value.max(0.0).powf(1.0 / p), e.error).with_order(p))
}

/// S² = Var_ν(τ/a) + (E_ν[τ/a] - 1)² for a Gaussian reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub variance_part: f64,
    pub covariance_part: f64,
}

impl Decomposition {
    pub fn total(&self) -> f64 {
        self.variance_part + self.covariance_part
    }
}

pub fn discrepancy_decomposition(target: &TargetDensity, kernel: &SteinKernel) -> Result<Decomposition> {
    let Reference1D::Gaussian { .. } = kernel.reference() else {
        return Err(Error::Precondition("the variance decomposition is stated for a Gaussian reference".into()));
    };
    if let Some(c) = kernel.as_constant() {
        let Reference1D::Gaussian { var } = kernel.reference() else { unreachable!() };
        return Ok(Decomposition { variance_part: 0.0, covariance_part: (c / var - 1.0).powi(2) });
    }
    let r = integrate_vec(
        |x| {
            let d = target.density(x);
            if d < DENSITY_FLOOR {
                return [0.0; 2];
            }
            let t = kernel.normalized(x);
            if !t.is_finite() {
                return [0.0; 2];
            }
            [t * d, t * t * d]
        },
        &target.interval(),
        &opts(),
    )?;
    if !r.converged {
        return Err(Error::NoConvergence { estimate: r.value[1], error: r.error[1] });
    }
    let c = r.value[0];
    // Var = E(τ - C)², computed as a second pass for accuracy
    let v = integrate_vec(
        |x| {
            let d = target.density(x);
            if d < DENSITY_FLOOR {
                return [0.0];
            }
            let t = kernel.normalized(x);
            if !t.is_finite() {
                return [0.0];
            }
            [(t - c) * (t - c) * d]
        },
        &target.interval(),
        &opts(),
    )?;
    Ok(Decomposition { variance_part: v.value[0], covariance_part: (c - 1.0) * (c - 1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::kernel::stein_kernel_1d;

    fn s(t: &TargetDensity, p: f64) -> f64 {
        let k = stein_kernel_1d(t).unwrap();
        stein_discrepancy(t, &k, p, NormKind::Hs).unwrap().value
    }

    #[test]
    fn examples() {
        assert_eq!(s(&TargetDensity::standard_gaussian(), 2.0), 0.0);
        assert_eq!(s(&TargetDensity::gaussian_scale(2.0).unwrap(), 2.0), 1.0);
        assert!((s(&TargetDensity::centered_gamma(1.0).unwrap(), 2.0) - 1.0).abs() < 1e-10);
        // S² = p + (p - 1)² for the centered gamma
        assert!((s(&TargetDensity::centered_gamma(3.0).unwrap(), 2.0).powi(2) - 7.0).abs() < 1e-9);
    }

    #[test]
    fn monotone_in_p() {
        for t in [TargetDensity::centered_gamma(1.0).unwrap(), TargetDensity::mixture(10.0, 0.1).unwrap(), TargetDensity::uniform()] {
            let (s1, s2, s4) = (s(&t, 1.0), s(&t, 2.0), s(&t, 4.0));
            assert!(s1 <= s2 + 1e-12 && s2 <= s4 + 1e-12, "{}: {s1} {s2} {s4}", t.tag());
        }
    }

    #[test]
    fn decomposition_examples() {
        let d = |t: TargetDensity| discrepancy_decomposition(&t, &stein_kernel_1d(&t).unwrap()).unwrap();
        let g = d(TargetDensity::standard_gaussian());
        assert_eq!((g.variance_part, g.covariance_part), (0.0, 0.0));
        let g2 = d(TargetDensity::gaussian_scale(2.0).unwrap());
        assert_eq!((g2.variance_part, g2.covariance_part), (0.0, 1.0));
        let e = d(TargetDensity::centered_gamma(1.0).unwrap());
        assert!((e.variance_part - 1.0).abs() < 1e-10 && e.covariance_part < 1e-20);
        let t = TargetDensity::mixture(10.0, 0.1).unwrap();
        let m = d(t.clone());
        assert!((m.total() - s(&t, 2.0).powi(2)).abs() < 1e-10);
    }

    #[test]
    fn product_in_two_dimensions() {
        let p = ProductTarget::new(vec![TargetDensity::gaussian_scale(2.0).unwrap(), TargetDensity::centered_gamma(1.0).unwrap()]).unwrap();
        let ks: Vec<_> = p.factors().iter().map(|f| stein_kernel_1d(f).unwrap()).collect();
        let id = DMatrix::identity(2, 2);
        let hs = stein_discrepancy_product(&p, &ks, &id, 2.0, NormKind::Hs).unwrap().value;
        assert!((hs * hs - 2.0).abs() < 1e-7, "{hs}");
        // HS and entrywise agree at p = 2, differ at p = 1
        let e2 = stein_discrepancy_product(&p, &ks, &id, 2.0, NormKind::Entrywise).unwrap().value;
        assert!((e2 - hs).abs() < 1e-7);
        let h1 = stein_discrepancy_product(&p, &ks, &id, 1.0, NormKind::Hs).unwrap().value;
        let e1 = stein_discrepancy_product(&p, &ks, &id, 1.0, NormKind::Entrywise).unwrap().value;
        assert!(h1 < e1);
    }
}
