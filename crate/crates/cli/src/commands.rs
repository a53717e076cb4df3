use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use steinlab::functionals::{
    fisher_information, relative_entropy, stein_discrepancy, stein_kernel_1d, total_variation_1d, wasserstein_p_1d, NormKind,
};
use steinlab::gamma_calculus::{
    check_criteria, default_grid, iterated_gamma, log_concave_conditions, point_grid, random_test_set, Diffusion1D, RPoly,
    CRITERION_TOL,
};
use steinlab::gauss_functionals::{
    carre_du_champ, concentration_moments, eigen_check, eigen_stein_bound, entropy_bound_gamma, entropy_bound_normal, equal_weights,
    fisher_u_bound, fourth_moment_bound, iid_sum_concentration, ou_apply, parse_vector, sum_discrepancy_clt, sum_histogram,
    PolyFunctional,
};
use steinlab::inequalities::{counterexample_sweep, hwsi_phi_min, sweep_csv, verify, InequalityKind, Status, VerifyOptions, VERIFY_REL_TOL};
use steinlab::measures::{make_target, Poly1};
use steinlab::ou_semigroup::{de_bruijn_check, decay_curves, decay_csv, DecayRow};

use crate::config::*;

/// Overall result of a run, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Success = 0,
    Indeterminate = 1,
    Violated = 2,
}

pub struct Run {
    pub reports: Vec<Value>,
    pub outcome: Outcome,
    pub curves_path: Option<String>,
}

impl Run {
    fn new() -> Self {
        Run { reports: Vec::new(), outcome: Outcome::Success, curves_path: None }
    }

    fn flag(&mut self, o: Outcome) {
        self.outcome = self.outcome.max(o);
    }

    /// A non-inequality report with the tolerances it was judged by.
    fn push<T: Serialize>(&mut self, name: &str, tolerances: Value, result: &T) -> Result<(), String> {
        let result = serde_json::to_value(result).map_err(|e| e.to_string())?;
        self.reports.push(json!({ "report": name, "tolerances": tolerances, "result": result }));
        Ok(())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn need<T>(v: Option<T>, what: &str) -> Result<T, String> {
    v.ok_or_else(|| format!("missing --{what}"))
}

/// 12 significant digits, with inf and nan spelled out.
fn csv_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.11e}")
    }
}

fn write_csv(path: &Path, text: &str) -> Result<String, String> {
    std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(path.display().to_string())
}

pub fn compute(a: &ComputeArgs) -> Result<Run, String> {
    let target = make_target(&need(a.target.clone(), "target")?).map_err(err)?;
    let p = a.p.unwrap_or(2.0);
    let mut run = Run::new();
    let kernel = stein_kernel_1d(&target).map_err(err)?;
    let mut values = vec![relative_entropy(&target).map_err(err)?, fisher_information(&target).map_err(err)?];
    values.push(stein_discrepancy(&target, &kernel, p, NormKind::Hs).map_err(err)?);
    values.push(wasserstein_p_1d(&target, p).map_err(err)?);
    if target.reference().is_standard_gaussian() {
        values.push(total_variation_1d(&target).map_err(err)?);
    }
    for v in &values {
        if v.diverged {
            run.flag(Outcome::Indeterminate);
        }
    }
    run.push("functionals", json!({}), &json!({ "target": target.tag(), "reference": target.reference().name(), "values": values }))?;
    Ok(run)
}

pub fn verify_cmd(a: &VerifyArgs) -> Result<Run, String> {
    let target = make_target(&need(a.target.clone(), "target")?).map_err(err)?;
    let names = a.kind.clone().unwrap_or_else(|| vec!["all".into()]);
    let all = names.iter().any(|n| n == "all");
    let kinds: Vec<InequalityKind> = if all {
        InequalityKind::ALL.to_vec()
    } else {
        names.iter().map(|n| n.parse::<InequalityKind>().map_err(err)).collect::<Result<_, _>>()?
    };
    let mut options = VerifyOptions { covariance: a.covariance, log_concave_c: a.log_concave_c, ..VerifyOptions::default() };
    if let Some(p) = a.p {
        options.p = p;
    }
    if let Some(t) = a.t {
        options.t = t;
    }
    let mut run = Run::new();
    for k in kinds {
        match verify(k, &target, &options) {
            Ok(r) => {
                match r.status {
                    Status::Holds => {}
                    Status::Violated => run.flag(Outcome::Violated),
                    Status::Indeterminate => run.flag(Outcome::Indeterminate),
                }
                run.reports.push(serde_json::to_value(&r).map_err(err)?);
            }
            // `all` skips kinds whose preconditions the target does not meet
            Err(e) if all => run.reports.push(json!({ "kind": k.name(), "skipped": e.to_string() })),
            Err(e) => return Err(format!("{}: {e}", k.name())),
        }
    }
    if a.hwsi.unwrap_or(false) {
        let m = hwsi_phi_min(&target).map_err(err)?;
        if m.bound < m.inputs.h - VERIFY_REL_TOL * m.bound.max(1.0) {
            run.flag(Outcome::Violated);
        }
        run.push("hwsi", json!({ "relative": VERIFY_REL_TOL }), &m)?;
    }
    Ok(run)
}

const DECAY_TOL: f64 = 1e-6;

fn decay_violations(r: &DecayRow) -> Vec<&'static str> {
    let ok = |lhs: f64, rhs: f64| lhs <= rhs * (1.0 + DECAY_TOL) + 1e-12;
    let mut v = Vec::new();
    if !ok(r.s, r.bound_s) {
        v.push("S");
    }
    if !ok(r.i, r.min_bound_i()) {
        v.push("I");
    }
    if !ok(r.h, r.bound_h_hsi1) || !ok(r.h, r.bound_h_hsi2) || !ok(r.h, r.bound_h_exp) {
        v.push("H");
    }
    v
}

pub fn evolve(a: &EvolveArgs) -> Result<Run, String> {
    let target = make_target(&need(a.target.clone(), "target")?).map_err(err)?;
    let times = a.times.clone().unwrap_or_else(|| (0..=12).map(|k| 0.25 * k as f64).collect());
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err("times must be finite and nonnegative".into());
    }
    let kernel = stein_kernel_1d(&target).map_err(err)?;
    let rows = decay_curves(&target, &kernel, &times).map_err(err)?;
    let mut run = Run::new();
    let mut violations = Vec::new();
    for r in &rows {
        if r.diverged {
            run.flag(Outcome::Indeterminate);
        }
        for v in decay_violations(r) {
            violations.push(json!({ "t": r.t, "functional": v }));
            run.flag(Outcome::Violated);
        }
    }
    run.push("decay", json!({ "relative": DECAY_TOL, "absolute": 1e-12 }), &json!({ "target": target.tag(), "rows": rows, "violations": violations }))?;
    if a.de_bruijn.unwrap_or(false) {
        let d = de_bruijn_check(&target, &kernel, 8.0, 64).map_err(err)?;
        run.push("de_bruijn", json!({ "horizon": 8.0, "panels": 64 }), &d)?;
    }
    if let Some(path) = &a.out {
        run.curves_path = Some(write_csv(path, &decay_csv(&rows))?);
    }
    Ok(run)
}

fn schedule(s: &str) -> Result<Box<dyn Fn(f64) -> f64 + Sync>, String> {
    let (name, arg) = s.split_once(':').unwrap_or((s, ""));
    let num = || arg.trim().parse::<f64>().map_err(|_| format!("bad schedule '{s}'"));
    Ok(match name.trim() {
        "sqrt" => Box::new(|n: f64| n.powf(-0.5)),
        "power" => {
            let e = num()?;
            Box::new(move |n: f64| n.powf(-e))
        }
        "const" => {
            let a = num()?;
            Box::new(move |_| a)
        }
        _ => return Err(format!("unknown schedule '{s}' (sqrt, power:e, const:a)")),
    })
}

pub fn sweep(a: &SweepArgs) -> Result<Run, String> {
    let ns = a.ns.clone().unwrap_or_else(|| vec![1e2, 1e3, 1e4]);
    let sched = schedule(a.schedule.as_deref().unwrap_or("sqrt"))?;
    let rows = counterexample_sweep(&ns, sched).map_err(err)?;
    let mut run = Run::new();
    if rows.iter().any(|r| !(r.hwi_holds && r.hsi_holds)) {
        run.flag(Outcome::Violated);
    }
    run.push("sweep", json!({ "relative": VERIFY_REL_TOL }), &rows)?;
    if let Some(path) = &a.out {
        run.curves_path = Some(write_csv(path, &sweep_csv(&rows))?);
    }
    Ok(run)
}

fn parse_diffusion(s: &str) -> Result<(Diffusion1D, Option<Poly1>), String> {
    let (name, arg) = s.split_once(':').unwrap_or((s, ""));
    let nums = || -> Result<Vec<f64>, String> {
        arg.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}' in '{s}'"))).collect()
    };
    match name.trim() {
        "ou" | "ornstein-uhlenbeck" => Ok((Diffusion1D::ornstein_uhlenbeck(), None)),
        "jacobi" => Ok((Diffusion1D::jacobi(), None)),
        "laguerre" => {
            let v = nums()?;
            if v.len() != 1 {
                return Err("laguerre takes one parameter p".into());
            }
            Ok((Diffusion1D::laguerre(v[0]).map_err(err)?, None))
        }
        "log-concave" | "log_concave" => {
            let u = Poly1::new(nums()?);
            Ok((Diffusion1D::log_concave(&u).map_err(err)?, Some(u)))
        }
        _ => Err(format!("unknown diffusion '{s}' (ou, laguerre:p, jacobi, log-concave:u0,u1,...)")),
    }
}

/// A univariate polynomial in `x`.
fn parse_univariate(s: &str) -> Result<RPoly, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut text = String::new();
    for (k, &c) in chars.iter().enumerate() {
        text.push(c);
        if c == 'x' && !chars.get(k + 1).is_some_and(|d| d.is_ascii_digit()) {
            text.push('1');
        }
    }
    let p: PolyFunctional = text.parse().map_err(err)?;
    if p.dim() != 1 {
        return Err(format!("'{s}' must be a polynomial in x alone"));
    }
    let coeffs: Vec<f64> = (0..=p.degree()).map(|k| p.coeff(&[k])).collect();
    RPoly::from_f64(&coeffs).map_err(err)
}

pub fn gamma_calc(a: &GammaCalcArgs, seed: u64) -> Result<Run, String> {
    let (diff, potential) = parse_diffusion(&need(a.diffusion.clone(), "diffusion")?)?;
    let mut run = Run::new();
    if let Some(f) = &a.f {
        let f = parse_univariate(f)?;
        let gammas: Vec<RPoly> = (1..=3).map(|n| iterated_gamma(&diff, n, &f)).collect::<Result<_, _>>().map_err(err)?;
        let xs = a.x.clone().unwrap_or_else(|| vec![0.5]);
        let values: Vec<Value> = xs.iter().map(|&x| json!({ "x": x, "gamma": gammas[0].eval_f64(x), "gamma2": gammas[1].eval_f64(x), "gamma3": gammas[2].eval_f64(x) })).collect();
        let body = json!({
            "diffusion": diff.name,
            "f": f.to_string(),
            "generator": diff.generator(&f).to_string(),
            "gamma": gammas[0].to_string(),
            "gamma2": gammas[1].to_string(),
            "gamma3": gammas[2].to_string(),
            "values": values,
        });
        run.push("iterated_gamma", json!({ "arithmetic": "exact rational" }), &body)?;
    }
    if let Some(c) = &a.criteria {
        if c.len() != 3 {
            return Err("--criteria takes rho,kappa,sigma".into());
        }
        let tests = random_test_set(a.test_count.unwrap_or(200), a.max_degree.unwrap_or(4), seed);
        let r = check_criteria(&diff, c[0], c[1], c[2], &tests, &point_grid(&diff)).map_err(err)?;
        if !r.pass {
            run.flag(Outcome::Violated);
        }
        run.push("criteria", json!({ "min_slack": CRITERION_TOL }), &r)?;
    }
    if let Some(c) = a.log_concave_c {
        let u = potential.ok_or("--log-concave-c needs a log-concave diffusion")?;
        let r = log_concave_conditions(&u, c, &default_grid());
        if !r.pass {
            run.flag(Outcome::Violated);
        }
        run.push("log_concave", json!({ "min_slack": CRITERION_TOL, "grid": "2001 points on [-10, 10]" }), &r)?;
    }
    if run.reports.is_empty() {
        return Err("gamma-calc needs --f, --criteria or --log-concave-c".into());
    }
    Ok(run)
}

pub fn functional(a: &FunctionalArgs, seed: u64) -> Result<Run, String> {
    let fs = parse_vector(&need(a.f.clone(), "f")?).map_err(err)?;
    let ops = a.op.clone().unwrap_or_else(|| vec!["lf".into(), "gamma".into(), "eigen".into()]);
    let samples = a.samples.unwrap_or(100_000);
    let alpha = a.alpha.unwrap_or(0.25);
    let mut run = Run::new();
    let tol = json!({ "eigen_relative": steinlab::gauss_functionals::EIGEN_REL_TOL, "exact_moment_degree": steinlab::gauss_functionals::MAX_EXACT_DEGREE });
    for op in &ops {
        match op.as_str() {
            "lf" => {
                let v: Vec<String> = fs.iter().map(|f| ou_apply(f).to_string()).collect();
                run.push("lf", json!({}), &v)?;
            }
            "gamma" => {
                let d = fs.len();
                let m: Vec<Vec<String>> = (0..d).map(|i| (0..d).map(|j| carre_du_champ(&fs[i], &fs[j]).to_string()).collect()).collect();
                run.push("gamma", json!({}), &m)?;
            }
            "eigen" => {
                let v: Vec<Option<f64>> = fs.iter().map(eigen_check).collect();
                run.push("eigen", tol.clone(), &v)?;
            }
            "v2" => {
                let r = eigen_stein_bound(&fs, samples, seed).map_err(err)?;
                run.push("v2", tol.clone(), &r)?;
            }
            "fourth" => {
                if fs.len() != 1 {
                    return Err("fourth takes a single functional".into());
                }
                let k = match a.k {
                    Some(k) => k,
                    None => eigen_check(&fs[0]).ok_or("F is not an eigenfunction")?,
                };
                let r = fourth_moment_bound(&fs[0], k, samples, seed).map_err(err)?;
                if !r.holds {
                    run.flag(Outcome::Violated);
                }
                run.push("fourth_moment", json!({ "standard_errors": 3.0 }), &r)?;
            }
            "fisher-u" => {
                let r = fisher_u_bound(&fs, samples, seed).map_err(err)?;
                if r.divergent {
                    run.flag(Outcome::Indeterminate);
                }
                run.push("fisher_u", json!({ "hill_divergence": steinlab::gauss_functionals::HILL_DIVERGENCE, "doubling_rise": steinlab::gauss_functionals::DOUBLING_RISE }), &r)?;
            }
            "entropy-normal" => {
                let r = entropy_bound_normal(&fs, alpha, a.s2, samples, seed).map_err(err)?;
                if r.divergent {
                    run.flag(Outcome::Indeterminate);
                }
                run.push("entropy_normal", json!({ "hill_divergence": steinlab::gauss_functionals::HILL_DIVERGENCE }), &r)?;
            }
            "entropy-gamma" => {
                if fs.len() != 1 {
                    return Err("entropy-gamma takes a single functional".into());
                }
                let r = entropy_bound_gamma(&fs[0], need(a.p, "p")?, alpha, samples, seed).map_err(err)?;
                if r.divergent {
                    run.flag(Outcome::Indeterminate);
                }
                run.push("entropy_gamma", json!({ "reject_below": steinlab::gauss_functionals::GAMMA_REJECT }), &r)?;
            }
            other => return Err(format!("unknown op '{other}'")),
        }
    }
    Ok(run)
}

pub fn clt(a: &CltArgs, seed: u64) -> Result<Run, String> {
    let base = make_target(&need(a.base.clone(), "base")?).map_err(err)?;
    let weights = match (&a.weights, a.n) {
        (Some(w), _) => w.clone(),
        (None, Some(n)) if n > 0 => equal_weights(n),
        _ => return Err("clt needs --n or --weights".into()),
    };
    let r = sum_discrepancy_clt(&base, &weights, a.poincare).map_err(err)?;
    let mut run = Run::new();
    run.push("clt", json!({ "weight_normalization": steinlab::gauss_functionals::WEIGHT_TOL }), &r)?;
    if let Some(path) = &a.hist_out {
        let h = sum_histogram(&base, &weights, -5.0, 5.0, 100, a.samples.unwrap_or(100_000), seed);
        let mut text = String::from("t,density\n");
        for (x, d) in h {
            text.push_str(&format!("{},{}\n", csv_num(x), csv_num(d)));
        }
        run.curves_path = Some(write_csv(path, &text)?);
    }
    Ok(run)
}

pub fn concentration(a: &ConcentrationArgs, seed: u64) -> Result<Run, String> {
    let target = make_target(a.target.as_deref().unwrap_or("gaussian")).map_err(err)?;
    let ps = a.p_list.clone().unwrap_or_else(|| vec![2.0, 4.0, 8.0]);
    let samples = a.samples.unwrap_or(100_000);
    let mut run = Run::new();
    let r = concentration_moments(&target, |x| x, &ps, samples, seed).map_err(err)?;
    run.push("moments", json!({}), &r)?;
    if let Some(n) = a.sum_n {
        let r = iid_sum_concentration(&target, n, &ps, a.r_max.unwrap_or(2.0), samples, seed).map_err(err)?;
        run.push("iid_sum", json!({ "rosenthal_k": "2p", "tail_fit_bins": steinlab::gauss_functionals::TAIL_FIT_BINS }), &r)?;
    }
    Ok(run)
}
