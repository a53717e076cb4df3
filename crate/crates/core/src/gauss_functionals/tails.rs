use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::montecarlo::{batch_rng, MCEstimate, BATCH};
use crate::parallel::{pairwise_sum, par_map_range};

/// Hill index below which a mean is treated as infinite.
pub const HILL_DIVERGENCE: f64 = 1.25;
/// Relative growth per doubling that counts as a rise.
pub const DOUBLING_RISE: f64 = 0.2;

/// Evaluates `f` on `samples` standard normal vectors of R^n, in sample order.
pub fn gaussian_values<F>(n: usize, samples: usize, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let nb = samples.div_ceil(BATCH);
    let parts = par_map_range(nb, |b| {
        let m = BATCH.min(samples - b * BATCH);
        let mut rng = batch_rng(seed, b as u64);
        let mut x = vec![0.0; n];
        (0..m)
            .map(|_| {
                for v in x.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                f(&x)
            })
            .collect::<Vec<f64>>()
    });
    parts.concat()
}

/// Mean and SE of a stored sample, summed pairwise.
pub fn estimate(values: &[f64], seed: u64) -> MCEstimate {
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    MCEstimate::from_sums(pairwise_sum(values), pairwise_sum(&sq), values.len(), seed)
}

/// Hill estimator of the tail index from the `k` largest positive values.
pub fn hill_index(values: &[f64], k: usize) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| *x > 0.0 && x.is_finite()).collect();
    if v.len() <= k || k == 0 {
        return f64::NAN;
    }
    let cut = v.len() - k - 1;
    v.select_nth_unstable_by(cut, f64::total_cmp);
    let threshold = v[cut];
    let tail = &v[cut + 1..];
    let h = tail.iter().map(|x| (x / threshold).ln()).sum::<f64>() / k as f64;
    1.0 / h
}

/// √N order statistics, at least 50.
pub fn default_hill_k(n: usize) -> usize {
    ((n as f64).sqrt() as usize).max(50)
}

/// Divergence diagnostics of a Monte Carlo mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDiagnostics {
    /// Means over the nested prefixes N/4, N/2, N.
    pub prefix_estimates: Vec<MCEstimate>,
    /// Both doublings raised the mean by more than 20%.
    pub doubling_flag: bool,
    pub hill_index: f64,
    pub hill_k: usize,
    /// Doubling flag or Hill index below [`HILL_DIVERGENCE`].
    pub divergent: bool,
    /// Hill index below 2: the mean may exist but its SE is unreliable.
    pub infinite_variance_suspected: bool,
}

pub fn diagnose(values: &[f64], seed: u64) -> TailDiagnostics {
    let n = values.len();
    let prefix_estimates: Vec<MCEstimate> = [n / 4, n / 2, n].iter().map(|&m| estimate(&values[..m], seed)).collect();
    let m: Vec<f64> = prefix_estimates.iter().map(|e| e.value).collect();
    let rises = |a: f64, b: f64| b > (1.0 + DOUBLING_RISE) * a && b > 0.0;
    let doubling_flag = rises(m[0], m[1]) && rises(m[1], m[2]);
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let hill_k = default_hill_k(n);
    let hill = hill_index(&abs, hill_k);
    TailDiagnostics {
        prefix_estimates,
        doubling_flag,
        hill_index: hill,
        hill_k,
        divergent: doubling_flag || hill < HILL_DIVERGENCE,
        infinite_variance_suspected: hill < 2.0,
    }
}

/// Fits -log f(r) = a + b r^β to the histogram density f of |u| on
/// [0, r_max] and returns β: 2 for a Gaussian, 1 for a Laplace law.
pub fn fit_tail_exponent(values: &[f64], r_max: f64, bins: usize) -> f64 {
    let w = r_max / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in values {
        let r = v.abs();
        if r < r_max {
            counts[((r / w) as usize).min(bins - 1)] += 1;
        }
    }
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| ((k as f64 + 0.5) * w, -(c as f64 / (values.len() as f64 * w)).ln()))
        .collect();
    if pts.len() < 3 {
        return f64::NAN;
    }
    let sse = |beta: f64| {
        let xs: Vec<f64> = pts.iter().map(|(r, _)| r.powf(beta)).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&pts).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let b = sxy / sxx;
        xs.iter().zip(&pts).map(|(x, p)| (p.1 - my - b * (x - mx)).powi(2)).sum::<f64>()
    };
    let grid: Vec<f64> = (0..=575).map(|k| 0.25 + 0.01 * k as f64).collect();
    grid.into_iter().min_by(|a, b| sse(*a).total_cmp(&sse(*b))).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::Exp1;

    #[test]
    fn hill_recovers_pareto_index() {
        let v = gaussian_values(1, 200_000, 3, |x| {
            // |Z|^{-1/2} has tail index 2
            x[0].abs().powf(-0.5)
        });
        let h = hill_index(&v, default_hill_k(v.len()));
        assert!((h - 2.0).abs() < 0.25, "{h}");
    }

    #[test]
    fn doubling_rule_on_a_growing_sequence() {
        let v: Vec<f64> = (0..4000).map(|k| if k < 1000 { 1.0 } else if k < 2000 { 2.0 } else { 4.0 }).collect();
        assert!(diagnose(&v, 0).doubling_flag);
        assert!(!diagnose(&vec![1.0; 4000], 0).doubling_flag);
    }

    #[test]
    fn exponent_fit_separates_gaussian_and_laplace() {
        let g = gaussian_values(1, 400_000, 1, |x| x[0]);
        let b = fit_tail_exponent(&g, 2.0, 20);
        assert!((b - 2.0).abs() < 0.15, "{b}");
        let mut rng = batch_rng(2, 0);
        let l: Vec<f64> = (0..400_000).map(|_| Exp1.sample(&mut rng)).collect::<Vec<f64>>();
        let b = fit_tail_exponent(&l, 2.0, 20);
        assert!((b - 1.0).abs() < 0.15, "{b}");
    }
}
