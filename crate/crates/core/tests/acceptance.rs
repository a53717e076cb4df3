//! One PASS/FAIL line per acceptance criterion. Runs as a plain binary so the
//! lines are printed whether or not everything passes.

use std::process::ExitCode;
use std::time::Instant;

use steinlab::functionals::{fisher_information, relative_entropy, stein_discrepancy, stein_kernel_1d, wasserstein_p_1d, NormKind};
use steinlab::gamma_calculus::{
    check_criteria, default_grid, iterated_gamma, jacobi_gamma3_gap, log_concave_conditions, point_grid, random_test_set, rat,
    Diffusion1D, RPoly,
};
use steinlab::gauss_functionals::{
    concentration_moments, eigen_check, equal_weights, fisher_u_bound, fourth_moment_bound, iid_sum_concentration, ou_apply,
    sum_discrepancy_clt, sum_of_pairs, PolyFunctional,
};
use steinlab::inequalities::{counterexample_sweep, hsi_rhs, verify, wsh_rhs, InequalityKind, VerifyOptions};
use steinlab::measures::{make_target, Poly1, TargetDensity};
use steinlab::ou_semigroup::{de_bruijn_check, decay_curves};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

fn gaussian_scale() -> Outcome {
    use InequalityKind::*;
    let mut worst = 0.0f64;
    for v in [0.5, 1.5, 2.0, 4.0] {
        let t = TargetDensity::gaussian_scale(v).map_err(e)?;
        let k = stein_kernel_1d(&t).map_err(e)?;
        let pairs = [
            (relative_entropy(&t).map_err(e)?.value, 0.5 * (v - 1.0 - v.ln()), "H"),
            (fisher_information(&t).map_err(e)?.value, (v - 1.0).powi(2) / v, "I"),
            (stein_discrepancy(&t, &k, 2.0, NormKind::Hs).map_err(e)?.value, (v - 1.0).abs(), "S"),
            (wasserstein_p_1d(&t, 2.0).map_err(e)?.value, (v.sqrt() - 1.0).abs(), "W2"),
        ];
        for (got, want, name) in pairs {
            let r = rel(got, want);
            worst = worst.max(r);
            if r > 1e-6 {
                return Err(format!("σ²={v}: {name} = {got}, closed form {want}"));
            }
        }
        for kind in [Lsi, Hsi, HsiImproved, Wsh, Talagrand, Hwi, W2s, TvStein, Pinsker] {
            let r = verify(kind, &t, &VerifyOptions::default()).map_err(e)?;
            if !r.holds {
                return Err(format!("σ²={v}: {} reports holds=false ({} > {})", kind.name(), r.lhs, r.rhs));
            }
        }
    }
    Ok(format!("max relative error {worst:.1e}, 9 inequalities hold on 4 targets"))
}

const BUILT_IN: [&str; 16] = [
    "gaussian-scale:0.5",
    "gaussian-scale:1.5",
    "gaussian-scale:2",
    "gaussian-scale:4",
    "centered-gamma:1",
    "centered-gamma:3",
    "centered-gamma:10",
    "uniform",
    "mixture:10,0.1",
    "mixture:100",
    "student:3",
    "student:5",
    "pearson:0,1.5,0.25,0,0.25",
    "perturbed-gaussian:2,0.2",
    "perturbed-gamma:3,2,0.2",
    "perturbed-uniform:2,0.2",
];

fn dominance() -> Outcome {
    let mut fired = Vec::new();
    let mut count = 0;
    for s in BUILT_IN {
        let t = make_target(s).map_err(e)?;
        let k = stein_kernel_1d(&t).map_err(e)?;
        let h = relative_entropy(&t).map_err(e)?.value;
        let i = fisher_information(&t).map_err(e)?.value;
        let sd = stein_discrepancy(&t, &k, 2.0, NormKind::Hs).map_err(e)?.value;
        let hsi = hsi_rhs(sd * sd, i, &mut fired);
        let wsh = wsh_rhs(sd, h, &mut fired);
        if !(hsi <= 0.5 * i + 1e-9) {
            return Err(format!("{s}: HSI rhs {hsi} > I/2 = {}", 0.5 * i));
        }
        if !(wsh <= (2.0 * h).sqrt() + 1e-9) {
            return Err(format!("{s}: WSH rhs {wsh} > sqrt(2H) = {}", (2.0 * h).sqrt()));
        }
        count += 1;
    }
    Ok(format!("{count} targets"))
}

fn de_bruijn() -> Outcome {
    let mut parts = Vec::new();
    for (s, tol) in [("gaussian-scale:2", 1e-4), ("mixture:10,0.1", 1e-3), ("centered-gamma:3", 1e-3)] {
        let t = make_target(s).map_err(e)?;
        let k = stein_kernel_1d(&t).map_err(e)?;
        let d = de_bruijn_check(&t, &k, 8.0, 64).map_err(e)?;
        if s == "gaussian-scale:2" {
            let exact = 0.5 * (1.0 - 2f64.ln());
            if rel(d.entropy, exact) > 1e-6 {
                return Err(format!("H(N(0,2)) = {}, analytic {exact}", d.entropy));
            }
        }
        parts.push(format!("{s} {:.1e}", d.residual.abs()));
        if !(d.residual.abs() < tol) || d.head_unbounded {
            return Err(format!("{s}: residual {} (tolerance {tol})", d.residual));
        }
    }
    Ok(parts.join(", "))
}

fn decay() -> Outcome {
    let times: Vec<f64> = (0..=12).map(|k| 0.25 * k as f64).collect();
    let within = |lhs: f64, rhs: f64| lhs <= rhs * (1.0 + 1e-6) + 1e-14;
    let mut gap = 0.0f64;
    for s in ["gaussian-scale:2", "centered-gamma:3"] {
        let t = make_target(s).map_err(e)?;
        let k = stein_kernel_1d(&t).map_err(e)?;
        for r in decay_curves(&t, &k, &times).map_err(e)? {
            let tag = format!("{s} t={}", r.t);
            if !within(r.s, r.bound_s) {
                return Err(format!("{tag}: S {} > {}", r.s, r.bound_s));
            }
            if !within(r.i, r.bound_i_lsi.min(r.bound_i_stein).min(r.bound_i_improved)) {
                return Err(format!("{tag}: I {} above {:?}", r.i, (r.bound_i_lsi, r.bound_i_stein, r.bound_i_improved)));
            }
            if !within(r.h, r.bound_h_hsi1) || !within(r.h, r.bound_h_hsi2) {
                return Err(format!("{tag}: H {} above ({}, {})", r.h, r.bound_h_hsi1, r.bound_h_hsi2));
            }
            if s.starts_with("gaussian") {
                let g = rel(r.s, r.bound_s);
                gap = gap.max(g);
                if g > 1e-6 {
                    return Err(format!("{tag}: S {} differs from e^-2t S = {}", r.s, r.bound_s));
                }
            }
        }
    }
    Ok(format!("13 times x 2 targets, Gaussian S-decay equality to {gap:.1e}"))
}

fn sweep() -> Outcome {
    let rows = counterexample_sweep(&[1e2, 1e3, 1e4], |n| n.powf(-0.5)).map_err(e)?;
    let target = 10f64.powf(0.25);
    let mut ratios = Vec::new();
    for w in rows.windows(2) {
        if !(w[1].hsi_rhs < w[0].hsi_rhs) {
            return Err(format!("HSI rhs not decreasing: {} -> {}", w[0].hsi_rhs, w[1].hsi_rhs));
        }
        let q = w[1].hwi_rhs / w[0].hwi_rhs;
        ratios.push(q);
        if !(q > 1.0 && q >= target / 2.0 && q <= 2.0 * target) {
            return Err(format!("HWI ratio {q} outside [{}, {}]", target / 2.0, 2.0 * target));
        }
    }
    if let Some(r) = rows.iter().find(|r| !(r.hsi_holds && r.hwi_holds)) {
        return Err(format!("n={}: an inequality fails", r.n));
    }
    Ok(format!("HWI ratios {:.3}, {:.3} against 10^(1/4) = {target:.3}", ratios[0], ratios[1]))
}

fn gamma_calculus() -> Outcome {
    let ou = Diffusion1D::ornstein_uhlenbeck();
    for deg in 0..=4 {
        let mut c = vec![0; deg + 1];
        c[deg] = 1;
        let f = RPoly::from_ints(&c);
        let (d1, d2, d3) = (f.derivative(), f.nth_derivative(2), f.nth_derivative(3));
        let g = d1.mul(&d1);
        let g2 = d2.mul(&d2).add(&g);
        let g3 = d3.mul(&d3).add(&g2.scale(&rat(3, 1))).sub(&g.scale(&rat(2, 1)));
        if iterated_gamma(&ou, 2, &f).map_err(e)? != g2 || iterated_gamma(&ou, 3, &f).map_err(e)? != g3 {
            return Err(format!("OU closed form mismatch on x^{deg}"));
        }
    }
    let jacobi = Diffusion1D::jacobi();
    let mut polys: Vec<RPoly> = (0..=6)
        .map(|d| {
            let mut c = vec![0; d + 1];
            c[d] = 1;
            RPoly::from_ints(&c)
        })
        .collect();
    polys.extend(random_test_set(30, 6, 17));
    for f in &polys {
        let gap = iterated_gamma(&jacobi, 3, f).map_err(e)?.sub(&iterated_gamma(&jacobi, 2, f).map_err(e)?);
        if gap != jacobi_gamma3_gap(f) {
            return Err(format!("Jacobi factorization fails for {f}"));
        }
    }
    let tests = random_test_set(200, 4, 5);
    let laguerre = Diffusion1D::laguerre(1.5).map_err(e)?;
    for (d, c) in [(&ou, (1.0, 1.0, 1.0)), (&laguerre, (0.5, 0.5, 0.5)), (&jacobi, (1.0, 1.0, 0.5))] {
        let r = check_criteria(d, c.0, c.1, c.2, &tests, &point_grid(d)).map_err(e)?;
        if !r.pass {
            return Err(format!("criteria fail for {} at {c:?}: {:?}", d.name, r.criteria));
        }
    }
    let grid = default_grid();
    let quad = Poly1::new(vec![0.0, 0.0, 0.5]);
    let quartic = Poly1::new(vec![0.0, 0.0, 0.5, 0.0, 1.0 / 12.0]);
    let lc = [
        (log_concave_conditions(&quad, 1.0 / 3.0, &grid).pass, true, "x²/2, c=1/3"),
        (log_concave_conditions(&quartic, 0.25, &grid).pass, true, "x²/2 + x⁴/12, c=1/4"),
        (log_concave_conditions(&quad, 2.0, &grid).pass, false, "x²/2, c=2"),
    ];
    for (got, want, name) in lc {
        if got != want {
            return Err(format!("log-concave checker on {name}: pass={got}, expected {want}"));
        }
    }
    Ok(format!("OU basis exact, Jacobi identity on {} polynomials, 3 criteria sets, 3 log-concave cases", polys.len()))
}

fn chaos_example() -> Outcome {
    let f = sum_of_pairs(5);
    if !ou_apply(&f).add(&f.scale(2.0)).is_empty() || eigen_check(&f) != Some(2.0) {
        return Err(format!("LF = {} is not -2F", ou_apply(&f)));
    }
    let a = fisher_u_bound(std::slice::from_ref(&f), 1_000_000, 101).map_err(e)?;
    let b = fisher_u_bound(&[f], 4_000_000, 202).map_err(e)?;
    let (ea, eb) = (a.estimate, b.estimate);
    let z = (ea.value - eb.value).abs() / (ea.std_error.powi(2) + eb.std_error.powi(2)).sqrt();
    if z > 3.0 || a.divergent || b.divergent {
        return Err(format!("n=5 unstable: {} vs {} (z = {z:.2}, flags {} {})", ea.value, eb.value, a.divergent, b.divergent));
    }
    let two = fisher_u_bound(&[sum_of_pairs(2)], 1_000_000, 101).map_err(e)?;
    if !two.divergent {
        return Err(format!("n=2 not flagged: Hill {:.3}", two.diagnostics.hill_index));
    }
    let mut fm = Vec::new();
    for (s, want) in [("(x1^2 - 1)/sqrt(2)", 2.0), ("x1^2 - 1", 9.0)] {
        let f: PolyFunctional = s.parse().map_err(e)?;
        let r = fourth_moment_bound(&f, 2.0, 100_000, 1).map_err(e)?;
        let se = r.v2.std_error.hypot(r.bound.std_error);
        let close = |x: f64| (x - want).abs() <= (3.0 * se).max(1e-9 * want);
        if !(close(r.v2.value) && close(r.bound.value)) {
            return Err(format!("{s}: V² = {}, bound = {}, expected {want}", r.v2.value, r.bound.value));
        }
        fm.push(format!("{}", r.v2.value));
    }
    Ok(format!(
        "n=5 {:.4} vs {:.4} (z = {z:.2}), n=2 Hill {:.2}, V² = bound = {}",
        ea.value,
        eb.value,
        two.diagnostics.hill_index,
        fm.join(", ")
    ))
}

fn clt() -> Outcome {
    let g = TargetDensity::centered_gamma(3.0).map_err(e)?;
    let r = sum_discrepancy_clt(&g, &equal_weights(100), None).map_err(e)?;
    let want = 7.0 / 200.0 * (1.0 + 200.0 / 7.0f64).ln();
    check(
        rel(r.s2_base, 7.0) < 1e-6 && rel(r.i_base, 2.0) < 1e-6 && rel(r.entropy_bound, want) < 1e-3,
        format!("S² = {:.6}, I = {:.6}, bound {:.6} against {want:.6}", r.s2_base, r.i_base, r.entropy_bound),
    )
}

fn concentration() -> Outcome {
    let ps: Vec<f64> = (2..=16).map(f64::from).collect();
    let g = TargetDensity::standard_gaussian();
    let r = concentration_moments(&g, |x| x, &ps, 1_000_000, 9).map_err(e)?;
    let (lo, hi) = r.rows.iter().fold((f64::INFINITY, 0.0f64), |(l, h), row| (l.min(row.u_norm_over_sqrt_p), h.max(row.u_norm_over_sqrt_p)));
    if !(lo >= 0.5 && hi <= 1.1) {
        return Err(format!("‖u‖_p/√p ranges over [{lo}, {hi}]"));
    }
    let base = TargetDensity::centered_gamma(1.0).map_err(e)?;
    let s = iid_sum_concentration(&base, 100, &[2.0], 2.0, 1_000_000, 9).map_err(e)?;
    check(s.tail_exponent >= 1.8, format!("Gaussian ratios in [{lo:.3}, {hi:.3}], Gamma(1) n=100 tail exponent {:.2}", s.tail_exponent))
}

fn general_reference() -> Outcome {
    let mut parts = Vec::new();
    for s in ["perturbed-gamma:3,2,0.2", "perturbed-gamma:3,4,0.05"] {
        let t = make_target(s).map_err(e)?;
        let o = VerifyOptions::default();
        let h = verify(InequalityKind::GeneralHsi, &t, &o).map_err(e)?;
        let w = verify(InequalityKind::W2sGeneral, &t, &o).map_err(e)?;
        if !(h.holds && h.slack > 0.0) {
            return Err(format!("{s}: H = {} against {}", h.lhs, h.rhs));
        }
        if !(w.holds && w.slack > 0.0) {
            return Err(format!("{s}: W₂ = {} against {}", w.lhs, w.rhs));
        }
        parts.push(format!("{s} H {:.4} <= {:.4}, W2 {:.4} <= {:.4}", h.lhs, h.rhs, w.lhs, w.rhs));
    }
    Ok(parts.join("; "))
}

fn cli_binary() -> Option<std::path::PathBuf> {
    let target = std::env::var_os("CARGO_TARGET_DIR")
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../target"));
    let exe = target.join("debug").join(format!("steinlab{}", std::env::consts::EXE_SUFFIX));
    exe.exists().then_some(exe)
}

fn determinism() -> Outcome {
    let run = || -> Result<String, String> {
        let f: PolyFunctional = "x1^2 - x2^2 + x1*x3".parse().map_err(e)?;
        let g = TargetDensity::centered_gamma(1.0).map_err(e)?;
        let a = fisher_u_bound(&[f], 50_000, 4).map_err(e)?;
        let b = iid_sum_concentration(&g, 20, &[2.0, 4.0], 2.0, 50_000, 4).map_err(e)?;
        serde_json::to_string(&(a, b)).map_err(e)
    };
    if run()? != run()? {
        return Err("library reports differ between identical runs".into());
    }
    let Some(exe) = cli_binary() else {
        return Ok("library reports identical; CLI binary not built, covered by the CLI tests".into());
    };
    let args = ["--seed", "3", "concentration", "--target", "centered-gamma:1", "--sum-n", "10", "--samples", "20000"];
    let out = || std::process::Command::new(&exe).args(args).env_remove("STEINLAB_SEED").output().map_err(e);
    let (x, y) = (out()?, out()?);
    check(x.status.success() && x.stdout == y.stdout, format!("library reports and CLI output byte-identical ({} bytes)", x.stdout.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("Gaussian scale closed forms", gaussian_scale),
        ("dominance on built-in targets", dominance),
        ("de Bruijn identity", de_bruijn),
        ("decay suite", decay),
        ("counterexample sweep", sweep),
        ("Gamma calculus", gamma_calculus),
        ("chaos example", chaos_example),
        ("entropic CLT arithmetic", clt),
        ("concentration", concentration),
        ("general-reference HSI", general_reference),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name}: {detail} [{:.1}s]", k + 1, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
