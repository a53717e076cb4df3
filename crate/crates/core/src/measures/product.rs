use rand::Rng;

use super::target::TargetDensity;
use crate::error::{Error, Result};

/// ν = ν₁ ⊗ ⋯ ⊗ ν_d on ℝ^d, each factor a centered 1D target.
#[derive(Debug, Clone)]
pub struct ProductTarget {
    factors: Vec<TargetDensity>,
}

impl ProductTarget {
    pub fn new(factors: Vec<TargetDensity>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Dimension("product target needs at least one factor".into()));
        }
        Ok(ProductTarget { factors })
    }

    /// d independent copies of one target.
    pub fn iid(t: TargetDensity, d: usize) -> Result<Self> {
        Self::new(vec![t; d])
    }

    pub fn dimension(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, i: usize) -> &TargetDensity {
        &self.factors[i]
    }

    pub fn factors(&self) -> &[TargetDensity] {
        &self.factors
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        self.factors.iter().zip(x).map(|(f, &xi)| f.log_density(xi)).sum()
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }

    /// ∇ log ρ.
    pub fn score(&self, x: &[f64]) -> Vec<f64> {
        self.factors.iter().zip(x).map(|(f, &xi)| f.dlog_density(xi)).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.factors.iter().map(|f| f.sample(rng)).collect()
    }

    /// Diagonal covariance.
    pub fn variances(&self) -> Result<Vec<f64>> {
        self.factors.iter().map(|f| f.variance()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_density_factorizes() {
        let p = ProductTarget::new(vec![TargetDensity::gaussian_scale(2.0).unwrap(), TargetDensity::centered_gamma(3.0).unwrap()])
            .unwrap();
        let x = [0.4, -1.1];
        let direct = p.factor(0).log_density(0.4) + p.factor(1).log_density(-1.1);
        assert_eq!(p.log_density(&x), direct);
        assert_eq!(p.variances().unwrap(), vec![2.0, 3.0]);
        assert!(ProductTarget::new(vec![]).is_err());
    }
}
