//! Fixed Gauss rules: Hermite (probabilists' weight), generalized Laguerre
//! and Legendre.

use std::f64::consts::PI;
use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

/// Nodes and weights of a fixed rule. Weights are normalized so that the
/// rule integrates the underlying probability measure to one (Hermite,
/// Laguerre) or the constant 1 to 2 (Legendre on [-1, 1]).
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule to `f`, summing in node order with a pairwise tree.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| if w == 0.0 { 0.0 } else { w * f(x) })
            .collect();
        crate::parallel::pairwise_sum(&terms)
    }
}

/// Gauss–Hermite rule for the standard normal weight `e^{-x²/2}/√(2π)`.
///
/// Nodes come from Newton iteration on the orthonormal physicists'
/// Hermite recurrence, then rescaled by √2.
pub fn gauss_hermite(n: usize) -> GaussRule {
    assert!(n >= 2, "Gauss–Hermite needs at least two nodes");
    let mut t = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * t[0],
            3 => 1.91 * z - 0.91 * t[1],
            _ => 2.0 * z - t[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        t[i] = z;
        t[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    let sqrt_pi = PI.sqrt();
    let mut nodes: Vec<f64> = t.iter().map(|&x| x * std::f64::consts::SQRT_2).collect();
    let mut weights: Vec<f64> = w.iter().map(|&x| x / sqrt_pi).collect();
    // ascending order
    nodes.reverse();
    weights.reverse();
    GaussRule { nodes, weights }
}

/// The Gauss–Hermite rule in force (128 nodes unless overridden), built
/// once per node count.
pub fn default_hermite() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    static OTHERS: Mutex<BTreeMap<usize, &'static GaussRule>> = Mutex::new(BTreeMap::new());
    match super::overrides().nodes {
        None | Some(128) => RULE.get_or_init(|| gauss_hermite(128)),
        Some(n) => *OTHERS.lock().unwrap_or_else(|e| e.into_inner()).entry(n).or_insert_with(|| Box::leak(Box::new(gauss_hermite(n)))),
    }
}

/// Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> GaussRule {
    assert!(n >= 2, "Gauss–Legendre needs at least two nodes");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    GaussRule { nodes, weights }
}

/// Generalized Gauss–Laguerre rule for the gamma(p) probability weight
/// `x^{p-1} e^{-x} / Γ(p)` on (0, ∞), via Golub–Welsch.
pub fn gauss_laguerre(n: usize, shape: f64) -> GaussRule {
    assert!(n >= 2, "Gauss–Laguerre needs at least two nodes");
    assert!(shape > 0.0, "gamma shape must be positive");
    let alpha = shape - 1.0;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let k = i as f64;
        jac[(i, i)] = 2.0 * k + alpha + 1.0;
        if i + 1 < n {
            let off = ((k + 1.0) * (k + 1.0 + alpha)).sqrt();
            jac[(i, i + 1)] = off;
            jac[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let v0 = eig.eigenvectors[(0, j)];
            (eig.eigenvalues[j], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // the probability normalization makes the zeroth moment 1
    let _ = ln_gamma(shape);
    GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let r = gauss_hermite(128);
        assert!((r.apply(|_| 1.0) - 1.0).abs() < 1e-13);
        assert!((r.apply(|x| x * x) - 1.0).abs() < 1e-12);
        assert!((r.apply(|x| x.powi(4)) - 3.0).abs() < 1e-11);
        assert!((r.apply(|x| x.powi(8)) - 105.0).abs() < 1e-9);
        assert!(r.apply(|x| x.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn hermite_small_rule_is_exact_for_low_degree() {
        let r = gauss_hermite(5);
        // exact up to degree 9
        assert!((r.apply(|x| x.powi(8)) - 105.0).abs() < 1e-10);
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let r = gauss_legendre(10);
        assert!((r.apply(|_| 1.0) - 2.0).abs() < 1e-14);
        assert!((r.apply(|x| x.powi(18)) - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn laguerre_gamma_moments() {
        let r = gauss_laguerre(40, 3.0);
        assert!((r.apply(|_| 1.0) - 1.0).abs() < 1e-12);
        // E G = p, E G² = p(p+1)
        assert!((r.apply(|x| x) - 3.0).abs() < 1e-11);
        assert!((r.apply(|x| x * x) - 12.0).abs() < 1e-10);
    }
}
