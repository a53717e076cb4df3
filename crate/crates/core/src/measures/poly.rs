use serde::{Deserialize, Serialize};

/// Dense univariate polynomial with f64 coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Poly1(pub Vec<f64>);

impl Poly1 {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Poly1(coeffs);
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.0.len() > 1 && *self.0.last().unwrap() == 0.0 {
            self.0.pop();
        }
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly1 {
        if self.0.len() <= 1 {
            return Poly1(vec![0.0]);
        }
        Poly1(self.0.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect())
    }

    /// k-th derivative.
    pub fn nth_derivative(&self, k: usize) -> Poly1 {
        (0..k).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn scale(&self, s: f64) -> Poly1 {
        Poly1::new(self.0.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Poly1) -> Poly1 {
        let n = self.0.len().max(other.0.len());
        Poly1::new(
            (0..n)
                .map(|k| self.0.get(k).copied().unwrap_or(0.0) + other.0.get(k).copied().unwrap_or(0.0))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly1) -> Poly1 {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly1::new(out)
    }
}

/// Generalized Laguerre polynomial L_k^{(α)} in the monomial basis.
pub fn laguerre(k: usize, alpha: f64) -> Poly1 {
    // L_k^{(α)}(x) = Σ_j (-1)^j C(k+α, k-j) x^j / j!
    let mut c = vec![0.0; k + 1];
    for (j, cj) in c.iter_mut().enumerate() {
        let mut binom = 1.0;
        // C(k+α, k-j) = Π_{i=1}^{k-j} (α + j + i) / i
        for i in 1..=(k - j) {
            binom *= (alpha + j as f64 + i as f64) / i as f64;
        }
        let fact: f64 = (1..=j).map(|i| i as f64).product();
        *cj = if j % 2 == 0 { 1.0 } else { -1.0 } * binom / fact;
    }
    Poly1::new(c)
}

/// Legendre polynomial P_k in the monomial basis.
pub fn legendre(k: usize) -> Poly1 {
    let mut p0 = Poly1(vec![1.0]);
    if k == 0 {
        return p0;
    }
    let mut p1 = Poly1(vec![0.0, 1.0]);
    for n in 1..k {
        let nf = n as f64;
        let x_p1 = p1.mul(&Poly1(vec![0.0, 1.0]));
        let next = x_p1.scale((2.0 * nf + 1.0) / (nf + 1.0)).add(&p0.scale(-nf / (nf + 1.0)));
        p0 = p1;
        p1 = next;
    }
    p1
}

/// Probabilists' Hermite polynomial He_k in the monomial basis.
pub fn hermite_he(k: usize) -> Poly1 {
    let mut p0 = Poly1(vec![1.0]);
    if k == 0 {
        return p0;
    }
    let mut p1 = Poly1(vec![0.0, 1.0]);
    for n in 1..k {
        let next = p1.mul(&Poly1(vec![0.0, 1.0])).add(&p0.scale(-(n as f64)));
        p0 = p1;
        p1 = next;
    }
    p1
}
