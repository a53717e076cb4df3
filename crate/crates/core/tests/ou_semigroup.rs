use steinlab::functionals::{relative_entropy, stein_kernel_1d};
use steinlab::measures::TargetDensity;
use steinlab::ou_semigroup::{de_bruijn_check, decay_csv, decay_curves, mehler_apply, mehler_evolve, DECAY_CSV_HEADER};

#[test]
fn mehler_formula_on_polynomials() {
    for t in [0.1f64, 0.7, 2.0] {
        let e = (-t).exp();
        for x in [-1.5, 0.0, 2.0] {
            assert!((mehler_apply(|y| y, t, x) - e * x).abs() < 1e-12);
            let want = e * e * x * x + 1.0 - e * e;
            assert!((mehler_apply(|y| y * y, t, x) - want).abs() < 1e-10);
        }
    }
}

#[test]
fn gaussian_scale_flow_stays_gaussian() {
    let v = 3.0;
    let t0 = TargetDensity::gaussian_scale(v).unwrap();
    for t in [0.25f64, 1.0, 2.5] {
        let e2 = (-2.0 * t).exp();
        let vt = e2 * v + 1.0 - e2;
        let nu = mehler_evolve(&t0, t).unwrap();
        let h = relative_entropy(nu.target()).unwrap().value;
        let want = 0.5 * (vt - 1.0 - vt.ln());
        assert!((h - want).abs() < 1e-8 * want.max(1e-3), "t={t}: {h} vs {want}");
    }
}

#[test]
fn decay_rows_and_csv() {
    let t = TargetDensity::centered_gamma(3.0).unwrap();
    let k = stein_kernel_1d(&t).unwrap();
    let rows = decay_curves(&t, &k, &[0.0, 0.5, 1.0, 2.0]).unwrap();
    assert!(rows.windows(2).all(|w| w[1].h < w[0].h && w[1].i < w[0].i && w[1].s < w[0].s));
    let csv = decay_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], DECAY_CSV_HEADER);
    assert_eq!(lines.len(), 5);
}

#[test]
fn de_bruijn_on_scaled_gaussian() {
    let v = 4.0f64;
    let t = TargetDensity::gaussian_scale(v).unwrap();
    let k = stein_kernel_1d(&t).unwrap();
    let d = de_bruijn_check(&t, &k, 8.0, 64).unwrap();
    assert!((d.entropy - 0.5 * (v - 1.0 - v.ln())).abs() < 1e-9);
    assert!(d.residual.abs() < 1e-4, "{d:?}");
}

#[test]
fn negative_time_is_rejected() {
    assert!(mehler_evolve(&TargetDensity::uniform(), -1.0).is_err());
}
