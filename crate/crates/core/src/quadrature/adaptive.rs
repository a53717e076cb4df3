#![allow(clippy::excessive_precision)]

//! Globally adaptive Gauss–Kronrod (G10/K21) integration with vector-valued
//! integrands, breakpoints and maps for infinite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::parallel::pairwise_sum;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_534_910,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// weights of the embedded 10-point Gauss rule at XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Integration domain: an interval with optional infinite ends, interior
/// breakpoints and a length scale used by the maps for infinite ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub breakpoints: Vec<f64>,
    pub center: f64,
    pub scale: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        let center = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        };
        Interval { lo, hi, breakpoints: Vec::new(), center, scale: 1.0 }
    }

    pub fn real_line() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn with_breakpoints(mut self, pts: &[f64]) -> Self {
        self.breakpoints.extend_from_slice(pts);
        self
    }

    /// Sets the center of the map used when both ends are infinite.
    pub fn with_center(mut self, c: f64) -> Self {
        if !self.lo.is_finite() && !self.hi.is_finite() {
            self.center = c;
        }
        self
    }

    pub fn with_scale(mut self, s: f64) -> Self {
        self.scale = s;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Range of the working variable t of the map onto this interval.
    pub fn t_bounds(&self) -> (f64, f64) {
        let (_, t0, t1) = Map::for_interval(self);
        (t0, t1)
    }

    pub fn x_of_t(&self, t: f64) -> f64 {
        Map::for_interval(self).0.apply(t).0
    }

    /// dx/dt of the map at t.
    pub fn dx_dt(&self, t: f64) -> f64 {
        Map::for_interval(self).0.apply(t).1
    }

    pub fn t_of_x(&self, x: f64) -> f64 {
        Map::for_interval(self).0.inverse(x)
    }
}

/// Map from the finite working variable t to x, with the Jacobian.
#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    Both { c: f64, s: f64 },
    Upper { a: f64, s: f64 },
    Lower { b: f64, s: f64 },
}

impl Map {
    fn for_interval(iv: &Interval) -> (Map, f64, f64) {
        let s = iv.scale;
        match (iv.lo.is_finite(), iv.hi.is_finite()) {
            (true, true) => (Map::Identity, iv.lo, iv.hi),
            (false, false) => (Map::Both { c: iv.center, s }, -1.0, 1.0),
            (true, false) => (Map::Upper { a: iv.lo, s }, 0.0, 1.0),
            (false, true) => (Map::Lower { b: iv.hi, s }, 0.0, 1.0),
        }
    }

    #[inline]
    fn apply(&self, t: f64) -> (f64, f64) {
        match *self {
            Map::Identity => (t, 1.0),
            Map::Both { c, s } => {
                let d = 1.0 - t * t;
                (c + s * t / d, s * (1.0 + t * t) / (d * d))
            }
            Map::Upper { a, s } => {
                let d = 1.0 - t;
                (a + s * t / d, s / (d * d))
            }
            Map::Lower { b, s } => {
                let d = 1.0 - t;
                (b - s * t / d, s / (d * d))
            }
        }
    }

    fn inverse(&self, x: f64) -> f64 {
        match *self {
            Map::Identity => x,
            Map::Both { c, s } => {
                let y = (x - c) / s;
                2.0 * y / (1.0 + (1.0 + 4.0 * y * y).sqrt())
            }
            Map::Upper { a, s } => {
                let y = (x - a) / s;
                y / (1.0 + y)
            }
            Map::Lower { b, s } => {
                let y = (b - x) / s;
                y / (1.0 + y)
            }
        }
    }
}

/// Tolerances and limits for the adaptive rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
    /// Number of equal pieces each breakpoint-delimited piece starts with.
    pub initial_pieces: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions { abs_tol: 1e-13, rel_tol: 1e-11, max_segments: 4000, initial_pieces: 4 }
    }
}

/// Result of a vector-valued integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VecEstimate<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub converged: bool,
    pub segments: usize,
}

#[derive(Debug, Clone)]
struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
    priority: f64,
    id: u64,
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<const N: usize> Eq for Segment<N> {}
impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn kronrod<const N: usize, F>(f: &F, map: Map, a: f64, b: f64) -> Result<([f64; N], [f64; N])>
where
    F: Fn(f64) -> [f64; N],
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let eval = |t: f64| -> Result<[f64; N]> {
        let (x, jac) = map.apply(t);
        if !x.is_finite() || !jac.is_finite() {
            return Ok([0.0; N]);
        }
        let mut v = f(x);
        for (k, vk) in v.iter_mut().enumerate() {
            let _ = k;
            if !vk.is_finite() {
                return Err(Error::NonFinite { x });
            }
            *vk *= jac;
            if !vk.is_finite() {
                // integrand tiny, Jacobian huge: treat as tail underflow
                *vk = 0.0;
            }
        }
        Ok(v)
    };
    let mut fv = [[0.0; N]; 21];
    fv[0] = eval(c)?;
    for j in 0..10 {
        fv[2 * j + 1] = eval(c - h * XGK[j])?;
        fv[2 * j + 2] = eval(c + h * XGK[j])?;
    }
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    let eps = f64::EPSILON;
    for k in 0..N {
        let fc = fv[0][k];
        let mut resk = WGK[10] * fc;
        let mut resg = 0.0;
        let mut resabs = WGK[10] * fc.abs();
        for j in 0..10 {
            let s = fv[2 * j + 1][k] + fv[2 * j + 2][k];
            resk += WGK[j] * s;
            resabs += WGK[j] * (fv[2 * j + 1][k].abs() + fv[2 * j + 2][k].abs());
            if j % 2 == 1 {
                resg += WG[j / 2] * s;
            }
        }
        let mean = 0.5 * resk;
        let mut resasc = WGK[10] * (fc - mean).abs();
        for j in 0..10 {
            resasc += WGK[j] * ((fv[2 * j + 1][k] - mean).abs() + (fv[2 * j + 2][k] - mean).abs());
        }
        let resk_h = resk * h;
        let resabs = resabs * h.abs();
        let resasc = resasc * h.abs();
        let mut err = ((resk - resg) * h).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        if resabs > f64::MIN_POSITIVE / (50.0 * eps) {
            err = err.max(50.0 * eps * resabs);
        }
        value[k] = resk_h;
        error[k] = err;
    }
    Ok((value, error))
}

fn tolerance_met<const N: usize>(val: &[f64; N], err: &[f64; N], opts: &AdaptiveOptions) -> bool {
    (0..N).all(|k| err[k] <= opts.abs_tol.max(opts.rel_tol * val[k].abs()))
}

fn sorted_totals<const N: usize>(segs: &mut [Segment<N>]) -> ([f64; N], [f64; N]) {
    segs.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut val = [0.0; N];
    let mut err = [0.0; N];
    let mut buf = Vec::with_capacity(segs.len());
    for k in 0..N {
        buf.clear();
        buf.extend(segs.iter().map(|s| s.value[k]));
        val[k] = pairwise_sum(&buf);
        buf.clear();
        buf.extend(segs.iter().map(|s| s.error[k]));
        err[k] = pairwise_sum(&buf);
    }
    (val, err)
}

/// Integrates a vector-valued `f` over `iv` (Lebesgue measure).
///
/// Segments are refined in order of largest error; ties break on creation
/// order, so the refinement path and the final sum are deterministic.
pub fn integrate_vec<const N: usize, F>(f: F, iv: &Interval, opts: &AdaptiveOptions) -> Result<VecEstimate<N>>
where
    F: Fn(f64) -> [f64; N],
{
    if !(iv.lo < iv.hi) {
        if iv.lo == iv.hi {
            return Ok(VecEstimate { value: [0.0; N], error: [0.0; N], converged: true, segments: 0 });
        }
        return Err(Error::InvalidParameter(format!("empty interval [{}, {}]", iv.lo, iv.hi)));
    }
    if !(iv.scale > 0.0) {
        return Err(Error::InvalidParameter("interval scale must be positive".into()));
    }
    let (map, t0, t1) = Map::for_interval(iv);
    let mut cuts: Vec<f64> = iv
        .breakpoints
        .iter()
        .filter(|&&x| x > iv.lo && x < iv.hi)
        .map(|&x| map.inverse(x))
        .filter(|&t| t > t0 && t < t1)
        .collect();
    cuts.push(t0);
    cuts.push(t1);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut next_id = 0u64;
    let mut heap: BinaryHeap<Segment<N>> = BinaryHeap::new();
    let mut done: Vec<Segment<N>> = Vec::new();
    let make = |a: f64, b: f64, id: &mut u64| -> Result<Segment<N>> {
        let (value, error) = kronrod(&f, map, a, b)?;
        let priority = error.iter().fold(0.0f64, |m, &e| m.max(e));
        *id += 1;
        Ok(Segment { a, b, value, error, priority, id: *id })
    };
    let pieces = opts.initial_pieces.max(1);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        for i in 0..pieces {
            let lo = a + (b - a) * i as f64 / pieces as f64;
            let hi = if i + 1 == pieces { b } else { a + (b - a) * (i + 1) as f64 / pieces as f64 };
            heap.push(make(lo, hi, &mut next_id)?);
        }
    }

    let mut tot_v = [0.0; N];
    let mut tot_e = [0.0; N];
    for s in heap.iter() {
        for k in 0..N {
            tot_v[k] += s.value[k];
            tot_e[k] += s.error[k];
        }
    }
    let mut converged = false;
    loop {
        if tolerance_met(&tot_v, &tot_e, opts) {
            let mut all: Vec<Segment<N>> = heap.iter().cloned().chain(done.iter().cloned()).collect();
            let (v, e) = sorted_totals(&mut all);
            if tolerance_met(&v, &e, opts) {
                converged = true;
                break;
            }
            tot_v = v;
            tot_e = e;
        }
        if heap.len() + done.len() >= opts.max_segments {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e3 * f64::EPSILON * worst.a.abs().max(worst.b.abs()) {
            done.push(worst);
            continue;
        }
        let left = make(worst.a, mid, &mut next_id)?;
        let right = make(mid, worst.b, &mut next_id)?;
        for k in 0..N {
            tot_v[k] += left.value[k] + right.value[k] - worst.value[k];
            tot_e[k] += left.error[k] + right.error[k] - worst.error[k];
        }
        heap.push(left);
        heap.push(right);
    }
    let mut all: Vec<Segment<N>> = heap.into_vec();
    all.extend(done);
    let segments = all.len();
    let (value, error) = sorted_totals(&mut all);
    let converged = converged || tolerance_met(&value, &error, opts);
    Ok(VecEstimate { value, error, converged, segments })
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate_scalar<F>(f: F, iv: &Interval, opts: &AdaptiveOptions) -> Result<(f64, f64, bool)>
where
    F: Fn(f64) -> f64,
{
    let r = integrate_vec(|x| [f(x)], iv, opts)?;
    Ok((r.value[0], r.error[0], r.converged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn phi(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
    }

    #[test]
    fn gaussian_moments_on_real_line() {
        let o = AdaptiveOptions::default();
        let iv = Interval::real_line();
        let r = integrate_vec(|x| [phi(x), x * x * phi(x), x.powi(4) * phi(x), x.abs() * phi(x)], &iv, &o).unwrap();
        assert!(r.converged);
        assert!((r.value[0] - 1.0).abs() < 1e-12);
        assert!((r.value[1] - 1.0).abs() < 1e-12);
        assert!((r.value[2] - 3.0).abs() < 1e-11);
        assert!((r.value[3] - (2.0 / PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn semi_infinite_exponential() {
        let o = AdaptiveOptions::default();
        let (v, _, ok) = integrate_scalar(|x| (-(x + 1.0)).exp(), &Interval::new(-1.0, f64::INFINITY), &o).unwrap();
        assert!(ok);
        assert!((v - 1.0).abs() < 1e-12);
        let (v, _, _) = integrate_scalar(|x| x.exp(), &Interval::new(f64::NEG_INFINITY, 0.0), &o).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn narrow_spike_with_breakpoint() {
        let o = AdaptiveOptions::default();
        let n = 1e4;
        let iv = Interval::real_line().with_breakpoints(&[-10.0 / n, 0.0, 10.0 / n]);
        let (v, _, ok) = integrate_scalar(|x| n * phi(n * x), &iv, &o).unwrap();
        assert!(ok);
        assert!((v - 1.0).abs() < 1e-11);
    }

    #[test]
    fn endpoint_singularity() {
        let o = AdaptiveOptions::default();
        let (v, _, _) = integrate_scalar(|x| 1.0 / x.sqrt(), &Interval::new(0.0, 1.0), &o).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn nan_is_reported() {
        let o = AdaptiveOptions::default();
        let e = integrate_scalar(|_| f64::NAN, &Interval::new(0.0, 1.0), &o).unwrap_err();
        assert!(matches!(e, Error::NonFinite { .. }));
    }

    #[test]
    fn bit_identical_repeats() {
        let o = AdaptiveOptions::default();
        let f = |x: f64| (x.sin() + 2.0) * phi(x);
        let a = integrate_scalar(f, &Interval::real_line(), &o).unwrap();
        let b = integrate_scalar(f, &Interval::real_line(), &o).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
    }
}
