use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::{digamma, ln_gamma};

use steinlab::functionals::{
    fisher_information, relative_entropy, stein_discrepancy, stein_identity_residual, stein_kernel_1d, total_variation_1d,
    wasserstein_p_1d, NormKind,
};
use steinlab::measures::TargetDensity;

/// Differential entropy of Gamma(k, 1).
fn gamma_entropy(k: f64) -> f64 {
    k + ln_gamma(k) + (1.0 - k) * digamma(k)
}

#[test]
fn centered_gamma_closed_forms() {
    for p in [2.5f64, 3.0, 6.0] {
        let t = TargetDensity::centered_gamma(p).unwrap();
        // H = -h(Gamma) + ½ log 2π + ½ E X²
        let h = -gamma_entropy(p) + 0.5 * (2.0 * std::f64::consts::PI).ln() + 0.5 * p;
        assert!((relative_entropy(&t).unwrap().value - h).abs() < 1e-7 * h, "H at p={p}");
        // τ(x) = x + p, so S² = E(X + p - 1)² = p + (p - 1)²
        let k = stein_kernel_1d(&t).unwrap();
        let s = stein_discrepancy(&t, &k, 2.0, NormKind::Hs).unwrap().value;
        assert!((s * s - (p + (p - 1.0).powi(2))).abs() < 1e-6, "S at p={p}");
        assert!(stein_identity_residual(&t, &k, &[1, 2, 3]).unwrap() < 1e-6);
        // I = E((p - 1)/Y + Y - p - 1)² with E 1/Y = 1/(p - 1), E 1/Y² = 1/((p - 1)(p - 2))
        let a = p - 1.0;
        let i = a * a / (a * (p - 2.0)) + 2.0 * a * (1.0 - (p + 1.0) / a) + p + 1.0;
        assert!((fisher_information(&t).unwrap().value - i).abs() < 1e-5 * i, "I at p={p}");
    }
}

#[test]
fn gaussian_scale_total_variation() {
    for v in [0.5f64, 2.0, 4.0] {
        let t = TargetDensity::gaussian_scale(v).unwrap();
        // the densities cross at ±c
        let c = (v * v.ln() / (v - 1.0)).sqrt();
        let n = Normal::new(0.0, 1.0).unwrap();
        let want = 2.0 * (n.cdf(c) - n.cdf(c / v.sqrt())).abs();
        assert!((total_variation_1d(&t).unwrap().value - want).abs() < 1e-7, "v={v}");
    }
}

#[test]
fn wasserstein_orders_are_monotone() {
    let t = TargetDensity::centered_gamma(3.0).unwrap();
    let ws: Vec<f64> = [1.0, 2.0, 3.0, 4.0].iter().map(|&p| wasserstein_p_1d(&t, p).unwrap().value).collect();
    assert!(ws.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{ws:?}");
}

#[test]
fn uniform_fisher_information_diverges() {
    let t = TargetDensity::uniform();
    let i = fisher_information(&t).unwrap();
    assert!(i.diverged || i.value.is_infinite(), "{i:?}");
    let h = relative_entropy(&t).unwrap().value;
    // log(1/(2√3)) + ½ log 2π + ½
    let want = -(12f64.sqrt()).ln() + 0.5 * (2.0 * std::f64::consts::PI).ln() + 0.5;
    assert!((h - want).abs() < 1e-8);
}

#[test]
fn standard_gaussian_is_the_zero_point() {
    let g = TargetDensity::standard_gaussian();
    let k = stein_kernel_1d(&g).unwrap();
    assert_eq!(k.as_constant(), Some(1.0));
    assert!(relative_entropy(&g).unwrap().value.abs() < 1e-12);
    assert!(fisher_information(&g).unwrap().value.abs() < 1e-10);
    assert!(stein_discrepancy(&g, &k, 2.0, NormKind::Hs).unwrap().value.abs() < 1e-12);
}
