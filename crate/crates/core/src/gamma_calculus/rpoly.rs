use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Univariate polynomial with exact rational coefficients, lowest degree first.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct RPoly(Vec<BigRational>);

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// The exact rational value of a finite double.
pub fn rat_f64(x: f64) -> Result<BigRational> {
    BigRational::from_f64(x).ok_or_else(|| Error::InvalidParameter(format!("{x} has no rational value")))
}

impl RPoly {
    pub fn new(mut c: Vec<BigRational>) -> Self {
        while c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        RPoly(c)
    }

    pub fn zero() -> Self {
        RPoly(Vec::new())
    }

    pub fn constant(c: BigRational) -> Self {
        RPoly::new(vec![c])
    }

    /// The monomial x.
    pub fn x() -> Self {
        RPoly::new(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn from_ints(c: &[i64]) -> Self {
        RPoly::new(c.iter().map(|&v| rat(v, 1)).collect())
    }

    pub fn from_f64(c: &[f64]) -> Result<Self> {
        Ok(RPoly::new(c.iter().map(|&v| rat_f64(v)).collect::<Result<_>>()?))
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, with the zero polynomial at 0.
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.0.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, o: &RPoly) -> RPoly {
        let n = self.0.len().max(o.0.len());
        RPoly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }

    pub fn sub(&self, o: &RPoly) -> RPoly {
        let n = self.0.len().max(o.0.len());
        RPoly::new((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }

    pub fn mul(&self, o: &RPoly) -> RPoly {
        if self.is_zero() || o.is_zero() {
            return RPoly::zero();
        }
        let mut c = vec![BigRational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        RPoly::new(c)
    }

    pub fn scale(&self, s: &BigRational) -> RPoly {
        RPoly::new(self.0.iter().map(|c| c * s).collect())
    }

    pub fn derivative(&self) -> RPoly {
        RPoly::new(self.0.iter().enumerate().skip(1).map(|(k, c)| c * BigRational::from_integer(BigInt::from(k))).collect())
    }

    pub fn nth_derivative(&self, n: usize) -> RPoly {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    /// Exact value at a rational point.
    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.0.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    /// Exact evaluation at the rational value of `x`, rounded once.
    pub fn eval_f64(&self, x: f64) -> f64 {
        match rat_f64(x) {
            Ok(r) => self.eval(&r).to_f64().unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        }
    }

    /// p(x + c) as a polynomial in x.
    pub fn shift(&self, c: &BigRational) -> RPoly {
        let xc = RPoly::new(vec![c.clone(), BigRational::one()]);
        self.0.iter().rev().fold(RPoly::zero(), |acc, k| acc.mul(&xc).add(&RPoly::constant(k.clone())))
    }

    /// Drops every term of degree above `d`.
    pub fn truncate(&self, d: usize) -> RPoly {
        RPoly::new(self.0.iter().take(d + 1).cloned().collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

impl fmt::Debug for RPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for RPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            let show = k == 0 || !a.is_one();
            if show {
                write!(f, "{a}")?;
            }
            match k {
                0 => {}
                1 => f.write_str(if show { "*x" } else { "x" })?,
                _ => write!(f, "{}x^{k}", if show { "*" } else { "" })?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let p = RPoly::from_ints(&[1, 2, 3]);
        let q = RPoly::from_ints(&[0, 1]);
        assert_eq!(p.mul(&q), RPoly::from_ints(&[0, 1, 2, 3]));
        assert_eq!(p.derivative(), RPoly::from_ints(&[2, 6]));
        assert_eq!(p.sub(&p), RPoly::zero());
        assert_eq!(p.eval(&rat(1, 2)), rat(11, 4));
        assert_eq!(p.shift(&rat(1, 1)), RPoly::from_ints(&[6, 8, 3]));
        assert_eq!(format!("{}", RPoly::from_ints(&[-1, 0, 2])), "2*x^2 - 1");
        assert_eq!(RPoly::from_f64(&[0.5]).unwrap().coeff(0), rat(1, 2));
    }
}
