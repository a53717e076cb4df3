use serde::{Deserialize, Serialize};

use super::{Convention, InequalityKind, InequalityReport, Lazy};
use crate::error::{Error, Result};
use crate::gamma_calculus::{log_concave_conditions, default_grid};
use crate::measures::{Reference1D, TargetDensity};

/// Constants (ρ, κ, σ) of the curvature hypotheses
/// Γ₂ ≥ ρΓ, Γ₃ ≥ κΓ₂ and Γ₂ ≥ σ‖a^{1/2} Hess a^{1/2}‖².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralConstants {
    pub rho: f64,
    pub kappa: f64,
    pub sigma: f64,
}

/// Ψ(r) = 1 + log r for r ≥ 1 and r on [0, 1].
#[derive(Debug, Clone, Copy)]
pub struct Psi;

impl Psi {
    pub fn eval(r: f64) -> f64 {
        if r >= 1.0 { 1.0 + r.ln() } else { r }
    }
}

/// The constants known for each reference. Gamma needs p ≥ ½ (one
/// dimension); a log-concave potential must pass the curvature conditions
/// for the given c.
pub fn general_constants(reference: &Reference1D, log_concave_c: Option<f64>) -> Result<GeneralConstants> {
    match reference {
        Reference1D::Gaussian { .. } => Ok(GeneralConstants { rho: 1.0, kappa: 1.0, sigma: 1.0 }),
        Reference1D::Gamma { p, .. } => {
            if *p < 0.5 {
                return Err(Error::Precondition(format!("gamma reference needs p ≥ 1/2 in dimension one, got p = {p}")));
            }
            Ok(GeneralConstants { rho: 0.5, kappa: 0.5, sigma: 0.5 })
        }
        Reference1D::Jacobi => Ok(GeneralConstants { rho: 1.0, kappa: 1.0, sigma: 0.5 }),
        Reference1D::LogConcave { u, .. } => {
            let c = log_concave_c.ok_or_else(|| Error::Precondition("log-concave reference needs the constant c".into()))?;
            let rep = log_concave_conditions(u, c, &default_grid());
            if !rep.pass {
                return Err(Error::Precondition(format!(
                    "potential fails {} for c = {c} (slack {:.3e} at x = {})",
                    rep.worst.condition, rep.worst.slack, rep.worst.x
                )));
            }
            Ok(GeneralConstants { rho: c, kappa: 3.0 * c, sigma: 1.0 })
        }
    }
}

fn check_constants(c: GeneralConstants) -> Result<()> {
    if [c.rho, c.kappa, c.sigma].iter().all(|v| *v > 0.0 && v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("ρ, κ, σ must be positive, got {c:?}")))
    }
}

/// (1/2σ) S² Ψ(σ max(ρ, κ) I / (ρκ S²)).
pub fn general_hsi_rhs(c: GeneralConstants, s2: f64, i: f64, fired: &mut Vec<Convention>) -> f64 {
    if s2 == 0.0 {
        fired.push(Convention::ZeroDiscrepancyPsi);
        return 0.0;
    }
    if i.is_infinite() {
        fired.push(Convention::InfiniteFisher);
        return f64::INFINITY;
    }
    let k = c.sigma * c.rho.max(c.kappa) / (c.rho * c.kappa);
    if s2.is_infinite() {
        // Ψ(r) = r near 0, so the bound tends to k I/(2σ)
        fired.push(Convention::InfiniteDiscrepancy);
        return k * i / (2.0 * c.sigma);
    }
    s2 / (2.0 * c.sigma) * Psi::eval(k * i / s2)
}

/// General HSI for a target against its own reference measure.
pub fn verify_general_hsi(target: &TargetDensity, c: GeneralConstants) -> Result<InequalityReport> {
    check_constants(c)?;
    let f = Lazy::new(target);
    let mut fired = Vec::new();
    let s = f.s()?;
    let rhs = general_hsi_rhs(c, s * s, f.i()?, &mut fired);
    let r = InequalityReport::new(InequalityKind::GeneralHsi, target.tag(), f.h()?, rhs, f.inputs(), fired);
    Ok(r.with_note(format!("reference {}; rho = {}, kappa = {}, sigma = {}", target.reference().name(), c.rho, c.kappa, c.sigma)))
}

/// W₂(ν, μ) ≤ (2/√(κσ)) S(ν|μ).
pub(super) fn verify_w2s_general(target: &TargetDensity, log_concave_c: Option<f64>) -> Result<InequalityReport> {
    let c = general_constants(target.reference(), log_concave_c)?;
    let f = Lazy::new(target);
    let rhs = 2.0 / (c.kappa * c.sigma).sqrt() * f.s()?;
    let r = InequalityReport::new(InequalityKind::W2sGeneral, target.tag(), f.w2()?, rhs, f.inputs(), vec![]);
    Ok(r.with_note(format!("reference {}", target.reference().name())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequalities::{verify, VerifyOptions};
    use crate::measures::Poly1;

    #[test]
    fn psi_shape() {
        assert_eq!(Psi::eval(0.3), 0.3);
        assert_eq!(Psi::eval(1.0), 1.0);
        assert!((Psi::eval(std::f64::consts::E) - 2.0).abs() < 1e-15);
        for r in [0.0, 0.5, 1.0, 2.0, 10.0] {
            assert!(Psi::eval(r) <= r);
        }
    }

    #[test]
    fn reference_is_trivial() {
        let g = TargetDensity::of_reference(Reference1D::gamma(1.5).unwrap());
        let r = verify_general_hsi(&g, general_constants(g.reference(), None).unwrap()).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.holds);
    }

    #[test]
    fn gamma_tilt_holds() {
        // a linear tilt is not centered for the Laguerre drift
        let lin = Poly1::new(vec![1.0 - 0.2, 0.2 / 3.0]);
        assert!(TargetDensity::tilted(Reference1D::gamma(3.0).unwrap(), lin).is_err());
        let t = TargetDensity::perturbed(Reference1D::gamma(3.0).unwrap(), 2, 0.2).unwrap();
        let r = verify(InequalityKind::GeneralHsi, &t, &VerifyOptions::default()).unwrap();
        assert!(r.holds && r.slack > 0.0 && r.lhs > 0.0, "{r:?}");
        let w = verify(InequalityKind::W2sGeneral, &t, &VerifyOptions::default()).unwrap();
        assert!(w.holds, "{w:?}");
    }

    #[test]
    fn jacobi_perturbation_holds() {
        let t = TargetDensity::perturbed(Reference1D::Jacobi, 2, 0.3).unwrap();
        let r = verify(InequalityKind::GeneralHsi, &t, &VerifyOptions::default()).unwrap();
        assert!(r.holds && r.slack > 0.0, "{r:?}");
    }

    #[test]
    fn rejects_small_gamma_shape() {
        assert!(matches!(general_constants(&Reference1D::gamma(0.4).unwrap(), None), Err(Error::Precondition(_))));
        assert!(verify_general_hsi(&TargetDensity::standard_gaussian(), GeneralConstants { rho: 0.0, kappa: 1.0, sigma: 1.0 }).is_err());
    }

    #[test]
    fn log_concave_needs_certificate() {
        let u = Poly1::new(vec![0.0, 0.0, 0.5, 0.0, 1.0 / 12.0]);
        let r = Reference1D::log_concave(u).unwrap();
        assert!(general_constants(&r, None).is_err());
        let c = general_constants(&r, Some(0.25)).unwrap();
        assert_eq!((c.rho, c.kappa, c.sigma), (0.25, 0.75, 1.0));
        assert!(general_constants(&r, Some(2.0)).is_err());
    }
}
