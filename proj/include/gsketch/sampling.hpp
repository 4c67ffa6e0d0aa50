#pragma once

#include <Eigen/Dense>

#include "gsketch/covariance.hpp"
#include "gsketch/quadrature.hpp"
#include "gsketch/rng.hpp"

namespace gsketch {

/// Eigen-factored PSD covariance K = basis diag(sqrt_eigenvalues^2) basis^T.
/// Eigenvalues are sorted descending; negatives and entries below
/// 2^-52 * lambda_1 are truncated to zero, matching the convention that the
/// Mercer series is cut where it reaches machine precision. Columns carry a
/// deterministic sign (largest-magnitude entry positive).
struct FactoredCovariance {
    Eigen::MatrixXd basis;            // n x r, orthonormal columns
    Eigen::VectorXd sqrt_eigenvalues; // r, nonincreasing, > 0
    Eigen::Index dim = 0;

    Eigen::Index rank() const { return sqrt_eigenvalues.size(); }
};

/// Symmetric eigen-factorization of a PSD matrix. Throws when K is
/// materially indefinite (an eigenvalue below -1e-6 * lambda_1).
FactoredCovariance factor_covariance(const Eigen::MatrixXd& K);

/// n x count matrix whose columns are i.i.d. N(0, K) draws, generated as
/// basis * diag(sqrt_eigenvalues) * G with G standard normal.
Eigen::MatrixXd draw_mvn_matrix(const FactoredCovariance& fac, RandomSource rng,
                                Eigen::Index count);

/// One draw from GP(0, K) evaluated at the grid nodes. Mercer-form specs
/// (JacobiMercer, LaplaceGreen) are sampled through their basis expansion;
/// anything else goes through discretize_covariance + factor_covariance.
Eigen::VectorXd sample_gp_function(const CovarianceSpec& spec, const QuadratureGrid& grid,
                                   RandomSource rng);

/// Computable sup-norm bound on the truncation error of a boundary-vanishing
/// polynomial GP draw: S_n = 2 sqrt(M) sum_{j>=n+2} |c_{j-1}| j^{(1-nu)/2},
/// summed over the available coefficients. Requires a power-law sequence;
/// M defaults to sup_j lambda_{j+1} (j+1)^nu over the realized sequence.
double truncation_tail_sup(const EigenSequence& seq, Eigen::Index n,
                           const Eigen::VectorXd& coeffs);

} // namespace gsketch
