//! Target densities, reference measures and the family parser.

pub mod pearson;
pub mod poly;
pub mod product;
pub mod reference;
pub mod special;
pub mod target;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use pearson::{check_tau_explosion, PearsonParams};
pub use poly::Poly1;
pub use product::ProductTarget;
pub use reference::{Reference1D, ReferenceMeasure, ReferenceSpec};
pub use target::{Family, TargetDensity};

/// Serializable description of a target family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    GaussianScale { sigma2: f64 },
    CenteredGamma { p: f64 },
    Uniform,
    Pearson(PearsonParams),
    Mixture {
        n: f64,
        #[serde(default)]
        a: Option<f64>,
    },
    StudentLike { alpha: f64 },
    /// 1 + ε Q_k against the reference's own orthogonal polynomials.
    Perturbed { reference: ReferenceSpec, degree: usize, eps: f64 },
    /// Polynomial tilt, coefficients lowest degree first.
    Tilted { reference: ReferenceSpec, poly: Vec<f64> },
    Reference { reference: ReferenceSpec },
}

impl FamilySpec {
    pub fn build(&self) -> Result<TargetDensity> {
        match self {
            FamilySpec::GaussianScale { sigma2 } => TargetDensity::gaussian_scale(*sigma2),
            FamilySpec::CenteredGamma { p } => TargetDensity::centered_gamma(*p),
            FamilySpec::Uniform => Ok(TargetDensity::uniform()),
            FamilySpec::Pearson(p) => TargetDensity::pearson(*p),
            FamilySpec::Mixture { n, a } => match a {
                Some(a) => TargetDensity::mixture(*n, *a),
                None => TargetDensity::mixture_default(*n),
            },
            FamilySpec::StudentLike { alpha } => TargetDensity::student_like(*alpha),
            FamilySpec::Perturbed { reference, degree, eps } => {
                TargetDensity::perturbed(reference.build()?, *degree, *eps)
            }
            FamilySpec::Tilted { reference, poly } => TargetDensity::tilted(reference.build()?, Poly1::new(poly.clone())),
            FamilySpec::Reference { reference } => Ok(TargetDensity::of_reference(reference.build()?)),
        }
    }

    /// Parses the short form used on the command line, e.g. `mixture:10,0.1`,
    /// `centered-gamma:3`, `pearson:0,1.5,0.25,0,0.25`, `perturbed-gamma:3,2,0.2`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), a.trim()),
            None => (s.trim(), ""),
        };
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|t| {
                    let t = t.trim();
                    match t {
                        "inf" | "+inf" => Ok(f64::INFINITY),
                        "-inf" => Ok(f64::NEG_INFINITY),
                        _ => t.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{t}' in '{s}'"))),
                    }
                })
                .collect::<Result<_>>()?
        };
        let want = |lo: usize, hi: usize| -> Result<()> {
            if nums.len() < lo || nums.len() > hi {
                Err(Error::Parse(format!("'{name}' takes {lo}..={hi} arguments, got {}", nums.len())))
            } else {
                Ok(())
            }
        };
        let finite_opt = |v: f64| if v.is_finite() { Some(v) } else { None };
        Ok(match name {
            "gaussian-scale" | "gaussian_scale" | "gaussian" => {
                want(0, 1)?;
                FamilySpec::GaussianScale { sigma2: nums.first().copied().unwrap_or(1.0) }
            }
            "centered-gamma" | "centered_gamma" | "gamma" => {
                want(1, 1)?;
                FamilySpec::CenteredGamma { p: nums[0] }
            }
            "uniform" => {
                want(0, 0)?;
                FamilySpec::Uniform
            }
            "mixture" => {
                want(1, 2)?;
                FamilySpec::Mixture { n: nums[0], a: nums.get(1).copied() }
            }
            "student" | "student-like" | "student_like" => {
                want(1, 1)?;
                FamilySpec::StudentLike { alpha: nums[0] }
            }
            "pearson" => {
                want(5, 7)?;
                FamilySpec::Pearson(PearsonParams {
                    a0: nums[0],
                    a1: nums[1],
                    b0: nums[2],
                    b1: nums[3],
                    b2: nums[4],
                    lo: nums.get(5).copied().and_then(finite_opt),
                    hi: nums.get(6).copied().and_then(finite_opt),
                })
            }
            "perturbed-gamma" | "perturbed_gamma" => {
                want(3, 3)?;
                FamilySpec::Perturbed { reference: ReferenceSpec::Gamma { p: nums[0] }, degree: nums[1] as usize, eps: nums[2] }
            }
            "perturbed-uniform" | "perturbed_uniform" => {
                want(2, 2)?;
                FamilySpec::Perturbed { reference: ReferenceSpec::UniformJacobi, degree: nums[0] as usize, eps: nums[1] }
            }
            "perturbed-gaussian" | "perturbed_gaussian" => {
                want(2, 2)?;
                FamilySpec::Perturbed { reference: ReferenceSpec::Gaussian { var: 1.0 }, degree: nums[0] as usize, eps: nums[1] }
            }
            _ => return Err(Error::Parse(format!("unknown family '{name}'"))),
        })
    }
}

/// Builds a target from its short form.
pub fn make_target(s: &str) -> Result<TargetDensity> {
    FamilySpec::parse(s)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_short_forms() {
        assert_eq!(FamilySpec::parse("mixture:10,0.1").unwrap(), FamilySpec::Mixture { n: 10.0, a: Some(0.1) });
        assert_eq!(FamilySpec::parse("centered-gamma:3").unwrap(), FamilySpec::CenteredGamma { p: 3.0 });
        assert_eq!(FamilySpec::parse("uniform").unwrap(), FamilySpec::Uniform);
        let p = FamilySpec::parse("pearson:1,1,2,1,0,-2,inf").unwrap();
        assert_eq!(
            p,
            FamilySpec::Pearson(PearsonParams { lo: Some(-2.0), ..PearsonParams::on_real_line(1.0, 1.0, 2.0, 1.0, 0.0) })
        );
        assert!(FamilySpec::parse("nope:1").is_err());
        assert!(FamilySpec::parse("mixture:x").is_err());
        assert!(FamilySpec::parse("uniform:1").is_err());
    }

    #[test]
    fn json_roundtrip() {
        let specs = vec![
            FamilySpec::Mixture { n: 100.0, a: None },
            FamilySpec::Perturbed { reference: ReferenceSpec::Gamma { p: 3.0 }, degree: 2, eps: 0.2 },
            FamilySpec::Pearson(PearsonParams::from_kernel(0.25, 0.0, 0.25, None, None)),
        ];
        for s in specs {
            let j = serde_json::to_string(&s).unwrap();
            let back: FamilySpec = serde_json::from_str(&j).unwrap();
            assert_eq!(back, s);
            back.build().unwrap();
        }
    }
}
