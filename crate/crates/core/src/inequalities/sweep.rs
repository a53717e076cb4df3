use serde::{Deserialize, Serialize};

use super::{hsi_rhs, Lazy, VERIFY_REL_TOL};
use crate::error::{Error, Result};
use crate::measures::TargetDensity;
use crate::parallel::par_map;

/// One row of the HWI-versus-HSI comparison on (1 - a)γ + a·N(0, 1/n²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: f64,
    pub a: f64,
    pub h: f64,
    pub i: f64,
    pub s2: f64,
    pub w2: f64,
    /// W₂ ≤ S.
    pub w2_upper: f64,
    pub hwi_rhs: f64,
    pub hsi_rhs: f64,
    /// a log(1 + n²)
    pub hsi_cap: f64,
    pub hwi_holds: bool,
    pub hsi_holds: bool,
    pub cap_holds: bool,
}

pub const SWEEP_CSV_HEADER: &str = "n,a,H,I,S2,W2,W2_upper,hwi_rhs,hsi_rhs,hsi_cap";

fn row(n: f64, a: f64) -> Result<SweepRow> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidParameter(format!("a_n = {a} outside [0, 1]")));
    }
    if a == 0.0 {
        return Ok(SweepRow {
            n,
            a,
            h: 0.0,
            i: 0.0,
            s2: 0.0,
            w2: 0.0,
            w2_upper: 0.0,
            hwi_rhs: 0.0,
            hsi_rhs: 0.0,
            hsi_cap: 0.0,
            hwi_holds: true,
            hsi_holds: true,
            cap_holds: true,
        });
    }
    let t = TargetDensity::mixture(n, a)?;
    let f = Lazy::new(&t);
    let (h, i, s, w2) = (f.h()?, f.i()?, f.s()?, f.w2()?);
    let s2 = s * s;
    let hwi_rhs = if w2 == 0.0 { 0.0 } else { w2 * i.sqrt() - 0.5 * w2 * w2 };
    let hsi = hsi_rhs(s2, i, &mut Vec::new());
    let cap = a * (n * n).ln_1p();
    let ok = |lhs: f64, rhs: f64| rhs - lhs >= -VERIFY_REL_TOL * rhs.max(1.0);
    Ok(SweepRow {
        n,
        a,
        h,
        i,
        s2,
        w2,
        w2_upper: s,
        hwi_rhs,
        hsi_rhs: hsi,
        hsi_cap: cap,
        hwi_holds: ok(h, hwi_rhs),
        hsi_holds: ok(h, hsi),
        cap_holds: ok(hsi, cap),
    })
}

/// Evaluates the mixture family at each n with weight `schedule(n)`.
pub fn counterexample_sweep(ns: &[f64], schedule: impl Fn(f64) -> f64 + Sync) -> Result<Vec<SweepRow>> {
    par_map(ns, |&n| row(n, schedule(n))).into_iter().collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let cols = [r.n, r.a, r.h, r.i, r.s2, r.w2, r.w2_upper, r.hwi_rhs, r.hsi_rhs, r.hsi_cap];
        out.push_str(&cols.iter().map(|x| format!("{x:.11e}")).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}
