use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use steinlab::quadrature::SchemeOverrides;

/// Fills every unset field of `$flags` from `$file`.
macro_rules! overlay {
    ($flags:expr, $file:expr, [$($f:ident),* $(,)?]) => {{
        let mut out = $flags;
        if let Some(file) = $file {
            $(if out.$f.is_none() { out.$f = file.$f; })*
        }
        out
    }};
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputeArgs {
    /// Target short form, e.g. gaussian-scale:2, centered-gamma:3, mixture:10,0.1
    #[arg(long)]
    pub target: Option<String>,
    /// Order of S_p and W_p
    #[arg(long)]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// Inequality kinds (comma separated, or `all`)
    #[arg(long, value_delimiter = ',')]
    pub kind: Option<Vec<String>>,
    #[arg(long)]
    pub target: Option<String>,
    /// Order for wp
    #[arg(long)]
    pub p: Option<f64>,
    /// Time for entropy_decay
    #[arg(long)]
    pub t: Option<f64>,
    /// Reference variance for hsi_cov
    #[arg(long)]
    pub covariance: Option<f64>,
    /// Curvature constant c of a log-concave reference
    #[arg(long)]
    pub log_concave_c: Option<f64>,
    /// Also minimize the HWSI interpolation
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub hwsi: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveArgs {
    #[arg(long)]
    pub target: Option<String>,
    /// Comma-separated times
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// CSV output path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also integrate the de Bruijn identity
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub de_bruijn: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<f64>>,
    /// a_n schedule: `sqrt` (n^-1/2), `power:e` (n^-e) or `const:a`
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaCalcArgs {
    /// ou, laguerre:p, jacobi or log-concave:u0,u1,... (potential coefficients)
    #[arg(long)]
    pub diffusion: Option<String>,
    /// Polynomial in x, e.g. `x^3 - 3*x`
    #[arg(long)]
    pub f: Option<String>,
    /// Points at which to evaluate Γ, Γ₂, Γ₃
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<f64>>,
    /// Check the criteria with constants rho,kappa,sigma
    #[arg(long, value_delimiter = ',')]
    pub criteria: Option<Vec<f64>>,
    #[arg(long)]
    pub test_count: Option<usize>,
    #[arg(long)]
    pub max_degree: Option<usize>,
    /// Check the log-concave conditions with this c
    #[arg(long)]
    pub log_concave_c: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalArgs {
    /// `;`-separated polynomials in x1, x2, ...
    #[arg(long)]
    pub f: Option<String>,
    /// lf, gamma, eigen, v2, fourth, fisher-u, entropy-normal, entropy-gamma
    #[arg(long, value_delimiter = ',')]
    pub op: Option<Vec<String>>,
    /// Chaos order for `fourth` (defaults to the eigenvalue)
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Gamma parameter for entropy-gamma
    #[arg(long)]
    pub p: Option<f64>,
    /// Known S² for entropy-normal
    #[arg(long)]
    pub s2: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltArgs {
    #[arg(long)]
    pub base: Option<String>,
    /// Number of equal weights
    #[arg(long)]
    pub n: Option<usize>,
    /// Explicit weights (Σa² = 1)
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub poincare: Option<f64>,
    /// Histogram CSV of T
    #[arg(long)]
    pub hist_out: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationArgs {
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub p_list: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Also study T_n for n iid copies
    #[arg(long)]
    pub sum_n: Option<usize>,
    #[arg(long)]
    pub r_max: Option<f64>,
}

/// Structured-text config: top-level options plus one table per command.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub json_out: Option<PathBuf>,
    pub quadrature: Option<SchemeOverrides>,
    pub compute: Option<ComputeArgs>,
    pub verify: Option<VerifyArgs>,
    pub evolve: Option<EvolveArgs>,
    pub sweep: Option<SweepArgs>,
    #[serde(rename = "gamma-calc", alias = "gamma_calc")]
    pub gamma_calc: Option<GammaCalcArgs>,
    pub functional: Option<FunctionalArgs>,
    pub clt: Option<CltArgs>,
    pub concentration: Option<ConcentrationArgs>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }
}

impl ComputeArgs {
    pub fn merged(self, file: Option<Self>) -> Self {
        overlay!(self, file, [target, p])
    }
}

impl VerifyArgs {
    pub fn merged(self, file: Option<Self>) -> Self {
        overlay!(self, file, [kind, target, p, t, covariance, log_concave_c, hwsi])
    }
}

impl EvolveArgs {
    pub fn merged(self, file: Option<Self>) -> Self {
        overlay!(self, file, [target, times, out, de_bruijn])
    }
}

impl SweepArgs {
    pub fn merged(self, file: Option<Self>) -> Self {
        overlay!(self, file, [ns, schedule, out])
    }
}

impl GammaCalcArgs {
    pub fn merged(self, file: Option<Self>) -> Self {
        overlay!(self, file, [diffusion, f, x, criteria, test_count, max_degree, log_concave_c])
    }
}

impl FunctionalArgs {
    pub fn merged(self, file: Option<Self>) -> Self {
        overlay!(self, file, [f, op, k, alpha, p, s2, samples])
    }
}

impl CltArgs {
    pub fn merged(self, file: Option<Self>) -> Self {
        overlay!(self, file, [base, n, weights, poincare, hist_out, samples])
    }
}

impl ConcentrationArgs {
    pub fn merged(self, file: Option<Self>) -> Self {
        overlay!(self, file, [target, p_list, samples, sum_n, r_max])
    }
}
