use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::SteinKernel;
use crate::measures::TargetDensity;
use crate::montecarlo::{batched, MCEstimate};

/// Fewer conditioning hits than this flag the estimate.
pub const SCORE_MIN_HITS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreEstimate {
    pub estimate: MCEstimate,
    pub bandwidth: f64,
    pub hits: usize,
    pub flagged: bool,
}

/// Monte Carlo estimate of v_t'(x) from
/// e^{-2t}(1 - e^{-2t})^{-1/2} E[(τ(F) - 1) Z | F_t = x],
/// conditioning on |F_t - x| < 0.1·std(F_t).
pub fn score_mc(target: &TargetDensity, kernel: &SteinKernel, t: f64, x: f64, samples: usize, seed: u64) -> Result<ScoreEstimate> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("score_mc needs t > 0, got {t}")));
    }
    let (a, s2) = ((-t).exp(), -(-2.0 * t).exp_m1());
    let s = s2.sqrt();
    let var = target.variance()?;
    if !var.is_finite() {
        return Err(Error::Precondition("the bandwidth rule needs a finite variance".into()));
    }
    let bw = 0.1 * (a * a * var + s2).sqrt();
    let sums = batched(seed, samples, |rng, n| {
        let mut acc = [0.0; 3];
        for _ in 0..n {
            let f = target.sample(rng);
            let z: f64 = StandardNormal.sample(rng);
            if (a * f + s * z - x).abs() < bw {
                let w = (kernel.normalized(f) - 1.0) * z;
                if w.is_finite() {
                    acc[0] += 1.0;
                    acc[1] += w;
                    acc[2] += w * w;
                }
            }
        }
        acc
    });
    let hits = sums[0] as usize;
    let estimate = MCEstimate::from_sums(sums[1], sums[2], hits, seed).scaled(a * a / s);
    Ok(ScoreEstimate { estimate: MCEstimate { samples, ..estimate }, bandwidth: bw, hits, flagged: hits < SCORE_MIN_HITS })
}
