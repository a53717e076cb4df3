//! Numerical verification of the entropy, transport and Stein-discrepancy
//! inequalities, one [`InequalityReport`] per statement.

mod general;
mod hwsi;
mod sweep;

use std::cell::OnceCell;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use general::{general_constants, verify_general_hsi, GeneralConstants, Psi};
pub use hwsi::{hwsi_phi, hwsi_phi_min, HwsiInputs, HwsiMinimum, MinimizerLocation};
pub use sweep::{counterexample_sweep, sweep_csv, SweepRow, SWEEP_CSV_HEADER};

use crate::error::{Error, Result};
use crate::functionals::{
    fisher_information, relative_entropy, stein_discrepancy, stein_kernel_1d, total_variation_1d, wasserstein_p_1d,
    FunctionalValue, NormKind, SteinKernel,
};
use crate::measures::{Reference1D, TargetDensity};
use crate::ou_semigroup::mehler_evolve;

/// Relative slack allowed before a theorem counts as violated.
pub const VERIFY_REL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    Lsi,
    Hsi,
    HsiImproved,
    HsiCov,
    Wsh,
    Talagrand,
    Hwi,
    W2s,
    Wp,
    TvStein,
    Pinsker,
    EntropyDecay,
    W2sGeneral,
    GeneralHsi,
}

impl InequalityKind {
    pub const ALL: [InequalityKind; 14] = [
        InequalityKind::Lsi,
        InequalityKind::Hsi,
        InequalityKind::HsiImproved,
        InequalityKind::HsiCov,
        InequalityKind::Wsh,
        InequalityKind::Talagrand,
        InequalityKind::Hwi,
        InequalityKind::W2s,
        InequalityKind::Wp,
        InequalityKind::TvStein,
        InequalityKind::Pinsker,
        InequalityKind::EntropyDecay,
        InequalityKind::W2sGeneral,
        InequalityKind::GeneralHsi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InequalityKind::Lsi => "lsi",
            InequalityKind::Hsi => "hsi",
            InequalityKind::HsiImproved => "hsi_improved",
            InequalityKind::HsiCov => "hsi_cov",
            InequalityKind::Wsh => "wsh",
            InequalityKind::Talagrand => "talagrand",
            InequalityKind::Hwi => "hwi",
            InequalityKind::W2s => "w2s",
            InequalityKind::Wp => "wp",
            InequalityKind::TvStein => "tv_stein",
            InequalityKind::Pinsker => "pinsker",
            InequalityKind::EntropyDecay => "entropy_decay",
            InequalityKind::W2sGeneral => "w2s_general",
            InequalityKind::GeneralHsi => "general_hsi",
        }
    }
}

impl fmt::Display for InequalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InequalityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        InequalityKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::Parse(format!("unknown inequality kind '{s}'")))
    }
}

/// The limit conventions that can fire while evaluating a right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// 0·log(1 + s/0) = 0
    ZeroDiscrepancy,
    /// ∞·log(1 + s/∞) = s
    InfiniteDiscrepancy,
    /// r·log(1 + ∞/r) = ∞
    InfiniteFisher,
    /// S² = I in the improved HSI bound, taken by continuity
    EqualLimit,
    /// H = 0 in the WSH bound: S·arccos(1) = 0
    ZeroEntropy,
    /// S² Ψ(c/S²) → 0 as S → 0
    ZeroDiscrepancyPsi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Violated,
    Indeterminate,
}

/// Functionals that entered a report. Absent entries were not needed;
/// infinite values are written as null in JSON.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

/// One verified statement lhs ≤ rhs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub kind: InequalityKind,
    pub target: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub status: Status,
    pub tolerance: f64,
    pub inputs: Inputs,
    pub conventions: Vec<Convention>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl InequalityReport {
    pub fn new(kind: InequalityKind, target: &str, lhs: f64, rhs: f64, inputs: Inputs, conventions: Vec<Convention>) -> Self {
        let tolerance = VERIFY_REL_TOL * if rhs.is_finite() { rhs.abs().max(1.0) } else { 1.0 };
        let slack = rhs - lhs;
        let status = if lhs.is_nan() || rhs.is_nan() || (lhs.is_infinite() && rhs.is_infinite()) {
            Status::Indeterminate
        } else if slack >= -tolerance {
            Status::Holds
        } else {
            Status::Violated
        };
        InequalityReport {
            kind,
            target: target.to_string(),
            lhs,
            rhs,
            slack,
            holds: status == Status::Holds,
            tolerance,
            status,
            inputs,
            conventions,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Extra inputs some kinds need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    /// Order for `wp`.
    pub p: f64,
    /// Time for `entropy_decay`.
    pub t: f64,
    /// Variance of the Gaussian reference for `hsi_cov` (1×1 covariance).
    pub covariance: Option<f64>,
    /// Constant c of a log-concave reference for the general kinds.
    pub log_concave_c: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { p: 1.0, t: 1.0, covariance: None, log_concave_c: None }
    }
}

/// Functionals of one target, computed on first use.
pub(crate) struct Lazy<'a> {
    target: &'a TargetDensity,
    kernel: OnceCell<SteinKernel>,
    h: OnceCell<f64>,
    i: OnceCell<f64>,
    s: OnceCell<f64>,
    w2: OnceCell<f64>,
    tv: OnceCell<f64>,
    s1: OnceCell<f64>,
    inputs: std::cell::RefCell<Inputs>,
}

fn value(v: FunctionalValue) -> f64 {
    if v.diverged { f64::INFINITY } else { v.value }
}

fn memo(cell: &OnceCell<f64>, f: impl FnOnce() -> Result<f64>) -> Result<f64> {
    if let Some(v) = cell.get() {
        return Ok(*v);
    }
    let v = f()?;
    Ok(*cell.get_or_init(|| v))
}

impl<'a> Lazy<'a> {
    pub(crate) fn new(target: &'a TargetDensity) -> Self {
        Lazy {
            target,
            kernel: OnceCell::new(),
            h: OnceCell::new(),
            i: OnceCell::new(),
            s: OnceCell::new(),
            w2: OnceCell::new(),
            tv: OnceCell::new(),
            s1: OnceCell::new(),
            inputs: Default::default(),
        }
    }

    pub(crate) fn kernel(&self) -> Result<&SteinKernel> {
        if let Some(k) = self.kernel.get() {
            return Ok(k);
        }
        let k = stein_kernel_1d(self.target)?;
        Ok(self.kernel.get_or_init(|| k))
    }

    pub(crate) fn h(&self) -> Result<f64> {
        let v = memo(&self.h, || Ok(value(relative_entropy(self.target)?)))?;
        self.inputs.borrow_mut().h = Some(v);
        Ok(v)
    }

    pub(crate) fn i(&self) -> Result<f64> {
        let v = memo(&self.i, || Ok(value(fisher_information(self.target)?)))?;
        self.inputs.borrow_mut().i = Some(v);
        Ok(v)
    }

    pub(crate) fn s(&self) -> Result<f64> {
        let v = memo(&self.s, || Ok(value(stein_discrepancy(self.target, self.kernel()?, 2.0, NormKind::Hs)?)))?;
        self.inputs.borrow_mut().s = Some(v);
        Ok(v)
    }

    pub(crate) fn s1(&self) -> Result<f64> {
        let v = memo(&self.s1, || Ok(value(stein_discrepancy(self.target, self.kernel()?, 1.0, NormKind::Hs)?)))?;
        self.inputs.borrow_mut().s1 = Some(v);
        Ok(v)
    }

    pub(crate) fn w2(&self) -> Result<f64> {
        let v = memo(&self.w2, || Ok(value(wasserstein_p_1d(self.target, 2.0)?)))?;
        self.inputs.borrow_mut().w2 = Some(v);
        Ok(v)
    }

    pub(crate) fn tv(&self) -> Result<f64> {
        let v = memo(&self.tv, || Ok(value(total_variation_1d(self.target)?)))?;
        self.inputs.borrow_mut().tv = Some(v);
        Ok(v)
    }

    pub(crate) fn inputs(&self) -> Inputs {
        *self.inputs.borrow()
    }
}

/// r log(1 + s/r) under the conventions 0·log(1 + s/0) = 0,
/// ∞·log(1 + s/∞) = s and r·log(1 + ∞/r) = ∞.
pub fn r_log_1p(r: f64, s: f64, fired: &mut Vec<Convention>) -> f64 {
    if r == 0.0 {
        fired.push(Convention::ZeroDiscrepancy);
        0.0
    } else if r.is_infinite() {
        fired.push(Convention::InfiniteDiscrepancy);
        s
    } else if s.is_infinite() {
        fired.push(Convention::InfiniteFisher);
        f64::INFINITY
    } else {
        r * (s / r).ln_1p()
    }
}

/// ½ S² log(1 + I/S²).
pub fn hsi_rhs(s2: f64, i: f64, fired: &mut Vec<Convention>) -> f64 {
    0.5 * r_log_1p(s2, i, fired)
}

/// S² I/(2(S² - I)) · (1 + I/(S² - I) · log(I/S²)), continuous across S² = I.
pub fn hsi_improved_rhs(s2: f64, i: f64, fired: &mut Vec<Convention>) -> f64 {
    if s2 == 0.0 || i == 0.0 {
        fired.push(Convention::ZeroDiscrepancy);
        return 0.0;
    }
    if i.is_infinite() {
        fired.push(Convention::InfiniteFisher);
        return f64::INFINITY;
    }
    if s2.is_infinite() {
        fired.push(Convention::InfiniteDiscrepancy);
        return 0.5 * i;
    }
    let x = i / s2;
    let e = 1.0 - x;
    if e.abs() < 1e-4 {
        fired.push(Convention::EqualLimit);
        return s2 * (0.25 - e / 6.0 - e * e / 24.0);
    }
    s2 * x / (2.0 * e) * (1.0 + x * x.ln() / e)
}

/// S·arccos(e^{-H/S²}), tending to √(2H) as S → ∞.
pub fn wsh_rhs(s: f64, h: f64, fired: &mut Vec<Convention>) -> f64 {
    if h == 0.0 {
        fired.push(Convention::ZeroEntropy);
        return 0.0;
    }
    if s == 0.0 {
        fired.push(Convention::ZeroDiscrepancy);
        return 0.0;
    }
    if s.is_infinite() {
        fired.push(Convention::InfiniteDiscrepancy);
        return (2.0 * h).sqrt();
    }
    if h.is_infinite() {
        return s * std::f64::consts::FRAC_PI_2;
    }
    // arccos(e^{-r}) = 2 asin(√((1 - e^{-r})/2)), stable for small r
    2.0 * s * (0.5 * -(-h / (s * s)).exp_m1()).sqrt().asin()
}

/// C_p = (E|Z|^p)^{1/p} for a standard normal Z.
pub fn gaussian_abs_moment_root(p: f64) -> f64 {
    let ln_m = 0.5 * p * 2f64.ln() + statrs::function::gamma::ln_gamma(0.5 * (p + 1.0)) - 0.5 * std::f64::consts::PI.ln();
    (ln_m / p).exp()
}

fn require_standard(target: &TargetDensity, kind: InequalityKind) -> Result<()> {
    if target.reference().is_standard_gaussian() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{kind} is stated against the standard Gaussian, not {}", target.reference().name())))
    }
}

/// Verifies one inequality for a 1D target.
pub fn verify(kind: InequalityKind, target: &TargetDensity, options: &VerifyOptions) -> Result<InequalityReport> {
    match kind {
        InequalityKind::GeneralHsi => {
            let c = general_constants(target.reference(), options.log_concave_c)?;
            return verify_general_hsi(target, c);
        }
        InequalityKind::W2sGeneral => return general::verify_w2s_general(target, options.log_concave_c),
        InequalityKind::HsiCov => return verify_hsi_cov(target, options),
        _ => require_standard(target, kind)?,
    }
    let f = Lazy::new(target);
    let mut fired = Vec::new();
    let tag = target.tag();
    let (lhs, rhs, note) = match kind {
        InequalityKind::Lsi => (f.h()?, 0.5 * f.i()?, None),
        InequalityKind::Hsi => {
            let s = f.s()?;
            (f.h()?, hsi_rhs(s * s, f.i()?, &mut fired), None)
        }
        InequalityKind::HsiImproved => {
            let s = f.s()?;
            (f.h()?, hsi_improved_rhs(s * s, f.i()?, &mut fired), None)
        }
        InequalityKind::Wsh => (f.w2()?, wsh_rhs(f.s()?, f.h()?, &mut fired), None),
        InequalityKind::Talagrand => (f.w2()?, (2.0 * f.h()?).sqrt(), None),
        InequalityKind::Hwi => {
            let (w, i) = (f.w2()?, f.i()?);
            let rhs = if w == 0.0 { 0.0 } else { w * i.sqrt() - 0.5 * w * w };
            (f.h()?, rhs, None)
        }
        InequalityKind::W2s => (f.w2()?, f.s()?, None),
        InequalityKind::Wp => {
            let p = options.p;
            if !(p >= 1.0) {
                return Err(Error::InvalidParameter(format!("wp needs p ≥ 1, got {p}")));
            }
            let k = f.kernel()?;
            let sp = value(stein_discrepancy(target, k, p, NormKind::Entrywise)?);
            let wp = value(wasserstein_p_1d(target, p)?);
            {
                let mut inp = f.inputs.borrow_mut();
                inp.p = Some(p);
                inp.s_p = Some(sp);
                inp.w_p = Some(wp);
            }
            // d = 1: both dimension factors equal one
            (wp, gaussian_abs_moment_root(p) * sp, Some("d = 1; the Stein kernel is a strong kernel".to_string()))
        }
        InequalityKind::TvStein => (f.tv()?, 2.0 * f.s1()?, None),
        InequalityKind::Pinsker => (f.tv()?, (0.5 * f.h()?).sqrt(), None),
        InequalityKind::EntropyDecay => {
            let t = options.t;
            let ev = mehler_evolve(target, t)?;
            let ht = value(relative_entropy(ev.target())?);
            let (h, s) = (f.h()?, f.s()?);
            f.inputs.borrow_mut().t = Some(t);
            let e = (-2.0 * t).exp();
            let rhs = if h == 0.0 || s == 0.0 {
                fired.push(Convention::ZeroDiscrepancy);
                0.0
            } else {
                e * e * h / (e + (1.0 - e) * h / (s * s))
            };
            let second = if t > 0.0 { e * e * s * s / (1.0 - e) } else { f64::INFINITY };
            (ht, rhs, Some(format!("second member e^(-4t)S^2/(1-e^(-2t)) = {second:.12e}")))
        }
        InequalityKind::HsiCov | InequalityKind::GeneralHsi | InequalityKind::W2sGeneral => unreachable!(),
    };
    let mut r = InequalityReport::new(kind, tag, lhs, rhs, f.inputs(), fired);
    if let Some(n) = note {
        r = r.with_note(n);
    }
    Ok(r)
}

/// HSI against γ_C in one dimension: the target is re-attached to N(0, C)
/// and S uses τ/C; ‖C‖_op I(ν|γ_C) is the Fisher information with a = C.
fn verify_hsi_cov(target: &TargetDensity, options: &VerifyOptions) -> Result<InequalityReport> {
    let var = match (options.covariance, target.reference()) {
        (Some(c), _) => c,
        (None, Reference1D::Gaussian { var }) => *var,
        (None, r) => return Err(Error::Precondition(format!("hsi_cov needs a Gaussian reference or a covariance, got {}", r.name()))),
    };
    let t = target.clone().with_reference(Reference1D::gaussian(var)?)?;
    let f = Lazy::new(&t);
    let mut fired = Vec::new();
    let s = f.s()?;
    let rhs = hsi_rhs(s * s, f.i()?, &mut fired);
    let r = InequalityReport::new(InequalityKind::HsiCov, target.tag(), f.h()?, rhs, f.inputs(), fired);
    Ok(r.with_note(format!("covariance {var}")))
}

/// Reports for several kinds; unsupported combinations come back as errors.
pub fn verify_all(kinds: &[InequalityKind], target: &TargetDensity, options: &VerifyOptions) -> Vec<Result<InequalityReport>> {
    kinds.iter().map(|&k| verify(k, target, options)).collect()
}
