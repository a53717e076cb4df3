//! Polynomial functionals of a standard Gaussian vector: exact generator and
//! carré du champ algebra, Monte Carlo estimates of the eigenfunction,
//! Fisher and entropic bounds, moment bounds and the entropic CLT rate.

mod bounds;
mod concentration;
mod matrix;
mod poly;
mod tails;

pub use bounds::{
    eigen_stein_bound, eigenvalues, entropy_bound_gamma, entropy_bound_normal, fisher_u_bound, fourth_moment_bound, kappa, poly_mean,
    poly_variance, EigenSteinBound, EntropyBoundReport, FisherUReport, FourthMomentReport, S2Source, UFields, GAMMA_REJECT,
};
pub use concentration::{
    concentration_moments, equal_weights, iid_sum_concentration, rosenthal_k, sum_discrepancy_clt, sum_histogram, CltReport,
    ConcentrationReport, MomentRow, SumConcentrationReport, SumMomentRow, TAIL_FIT_BINS, WEIGHT_TOL,
};
pub use matrix::GammaMatrix;
pub use poly::{
    carre_du_champ, common_dim, eigen_check, gaussian_moment, ou_apply, parse_vector, sum_of_pairs, PolyFunctional, EIGEN_REL_TOL,
    MAX_EXACT_DEGREE,
};
pub use tails::{
    default_hill_k, diagnose, estimate, fit_tail_exponent, gaussian_values, hill_index, TailDiagnostics, DOUBLING_RISE, HILL_DIVERGENCE,
};
