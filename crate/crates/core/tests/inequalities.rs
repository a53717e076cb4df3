use steinlab::functionals::stein_kernel_1d;
use steinlab::inequalities::{
    counterexample_sweep, hsi_improved_rhs, hsi_rhs, hwsi_phi_min, verify, wsh_rhs, InequalityKind, MinimizerLocation, Status,
    VerifyOptions,
};
use steinlab::measures::TargetDensity;

#[test]
fn sweep_directions() {
    let rows = counterexample_sweep(&[1e2, 1e3, 1e4], |n| n.powf(-0.5)).unwrap();
    for r in &rows {
        println!("{r:?}");
        assert!(r.hsi_holds && r.hwi_holds && r.cap_holds, "{r:?}");
        assert!(r.s2 <= r.a * (1.0 + 1e-9));
        assert!(r.w2 <= r.w2_upper + 1e-12);
    }
    for w in rows.windows(2) {
        assert!(w[1].hsi_rhs < w[0].hsi_rhs);
        assert!(w[1].hwi_rhs > w[0].hwi_rhs);
    }
}

#[test]
fn improved_below_hsi_on_gaussian_scale() {
    for v in [1.5, 2.0, 4.0] {
        let t = TargetDensity::gaussian_scale(v).unwrap();
        let o = VerifyOptions::default();
        let a = verify(InequalityKind::HsiImproved, &t, &o).unwrap();
        let b = verify(InequalityKind::Hsi, &t, &o).unwrap();
        assert!(a.rhs <= b.rhs + 1e-12, "{v}: {a:?} {b:?}");
    }
}

#[test]
fn hwsi_on_gaussian() {
    let m = hwsi_phi_min(&TargetDensity::gaussian_scale(2.0).unwrap()).unwrap();
    let v = m.inputs;
    let hwi = v.w2 * v.i.sqrt() - 0.5 * v.w2 * v.w2;
    let hsi = hsi_rhs(v.s * v.s, v.i, &mut vec![]);
    assert!(m.bound <= hwi.min(hsi) + 1e-9);
    assert!(m.bound >= v.h);
    println!("minimizer {:?} at ({}, {})", m.location, m.alpha, m.beta);
    let _ = MinimizerLocation::Interior;
}

#[test]
fn divergent_fisher_is_covered_by_convention() {
    let t = TargetDensity::uniform();
    let o = VerifyOptions::default();
    let r = verify(InequalityKind::Hsi, &t, &o).unwrap();
    assert_eq!(r.status, Status::Holds);
    assert!(r.rhs.is_infinite());
    let l = verify(InequalityKind::Lsi, &t, &o).unwrap();
    assert!(l.holds);
    // the Stein kernel exists for the uniform law, so W₂ ≤ S still has content
    let w = verify(InequalityKind::W2s, &t, &o).unwrap();
    assert!(w.holds && w.rhs.is_finite());
    let _ = stein_kernel_1d(&t).unwrap();
}

#[test]
fn rhs_helpers_are_monotone_in_their_limits() {
    let mut f = vec![];
    for h in [0.01, 0.1, 1.0] {
        assert!(wsh_rhs(1e8, h, &mut f) <= (2.0 * h).sqrt() + 1e-9);
        assert!((wsh_rhs(1e8, h, &mut f) - (2.0 * h).sqrt()).abs() < 1e-6);
    }
    assert!((hsi_improved_rhs(1e12, 3.0, &mut f) - 1.5).abs() < 1e-6);
}
