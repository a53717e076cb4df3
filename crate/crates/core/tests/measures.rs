use statrs::distribution::{ContinuousCDF, Gamma, Normal};

use steinlab::measures::{make_target, TargetDensity};
use steinlab::montecarlo::batch_rng;
use steinlab::quadrature::{gauss_hermite, gauss_legendre};

#[test]
fn moments_of_built_in_targets() {
    let g = TargetDensity::centered_gamma(3.0).unwrap();
    assert!(g.mean().unwrap().abs() < 1e-9);
    assert!((g.variance().unwrap() - 3.0).abs() < 1e-8);
    let u = TargetDensity::uniform();
    assert!((u.variance().unwrap() - 1.0).abs() < 1e-9);
    let s = TargetDensity::gaussian_scale(2.5).unwrap();
    assert!((s.expect(|_| 1.0).unwrap() - 1.0).abs() < 1e-10);
    assert!((s.expect(|x| x.powi(4)).unwrap() - 3.0 * 2.5 * 2.5).abs() < 1e-8);
}

#[test]
fn cdf_agrees_with_statrs() {
    let p = 2.5;
    let t = TargetDensity::centered_gamma(p).unwrap();
    let oracle = Gamma::new(p, 1.0).unwrap();
    for x in [-2.0, -0.5, 0.0, 1.0, 4.0, 9.0] {
        assert!((t.cdf(x) - oracle.cdf(x + p)).abs() < 1e-9, "x = {x}");
    }
    let n = TargetDensity::gaussian_scale(2.0).unwrap();
    let oracle = Normal::new(0.0, 2f64.sqrt()).unwrap();
    for u in [1e-6, 0.1, 0.5, 0.9, 1.0 - 1e-6] {
        assert!((n.quantile(u).unwrap() - oracle.inverse_cdf(u)).abs() < 1e-7, "u = {u}");
    }
}

#[test]
fn sampling_matches_moments() {
    let t = make_target("mixture:10,0.1").unwrap();
    let mut rng = batch_rng(5, 0);
    let n = 200_000;
    let draws: Vec<f64> = (0..n).map(|_| t.sample(&mut rng)).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let (m, v) = (t.mean().unwrap(), t.variance().unwrap());
    assert!((mean - m).abs() < 5.0 * (v / n as f64).sqrt());
    assert!((var - v).abs() < 0.02 * v);
}

#[test]
fn short_forms() {
    for s in ["gaussian", "gaussian-scale:2", "centered-gamma:1", "uniform", "mixture:100", "student:4", "perturbed-gamma:3,2,0.2"] {
        let t = make_target(s).unwrap();
        assert!((t.expect(|_| 1.0).unwrap() - 1.0).abs() < 1e-7, "{s}");
    }
    for s in ["", "gaussian-scale:-1", "centered-gamma", "mixture:1,2,3", "student:x", "perturbed-gamma:3,1,0.2", "nope:1"] {
        assert!(make_target(s).is_err(), "{s}");
    }
}

#[test]
fn quadrature_rules_are_exact_on_polynomials() {
    let h = gauss_hermite(20);
    // E X^{2k} = (2k - 1)!!
    for (k, want) in [(0, 1.0), (2, 1.0), (4, 3.0), (6, 15.0), (8, 105.0)] {
        assert!((h.apply(|x| x.powi(k)) - want).abs() < 1e-10 * want);
    }
    let l = gauss_legendre(8);
    assert!((l.apply(|x| x.powi(6)) - 2.0 / 7.0).abs() < 1e-13);
}
