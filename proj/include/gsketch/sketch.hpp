#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "gsketch/rng.hpp"

namespace gsketch {

/// Target rank, oversampling and the (t, u) parameters entering the
/// probability bound. Bound evaluation requires p >= 4.
struct SketchConfig {
    int k = 1;
    int p = 5;
    double t = 1.0;
    double u = 1.0;
};

enum class BoundMode { Generalized, StandardHMT };

/// Covariance quality factors for a fixed target rank:
///   gamma_k = k / (lambda_1 * Tr((V1' K V1)^{-1}))
///   beta_k  = Tr(Sigma2^2 V2' K V2) / (lambda_1 * ||Sigma2||_F^2)
/// Both equal 1 for the identity covariance.
struct QualityFactors {
    double gamma_k = 1.0;
    double beta_k = 1.0;
    double lambda1 = 1.0;
    bool exact_rank_deficient = false; // Sigma2 == 0, beta defined as 0
};

struct LowRankFactors {
    Eigen::MatrixXd Q; // orthonormal columns
    Eigen::MatrixXd B; // Q^T A
};

struct SketchResult {
    int k = 0;
    int p = 0;
    std::uint64_t seed = 0;
    double error_fro = 0.0;
    double error_rel = 0.0;
    double tail = 0.0;      // best achievable Frobenius error at rank k
    double gamma_k = 0.0;
    double beta_k = 0.0;
    double bound_rhs = 0.0; // right-hand side at the config's (t, u)
    bool has_diagnostics = false;
    LowRankFactors factors;
    Eigen::MatrixXd omega;
};

/// A linear map with its adjoint, for sketching operators that are not
/// materialized as matrices.
struct LinearOperator {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> apply;
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> apply_adjoint;
};

LinearOperator dense_operator(const Eigen::MatrixXd& A);

/// Orthonormal basis of range(A * omega). Rank-deficient sketches fall back
/// to column-pivoted QR, dropping columns whose pivot is below
/// 1e-12 * ||A omega||_F; a zero sketch yields an empty (n x 0) basis.
Eigen::MatrixXd range_finder(const LinearOperator& A, const Eigen::MatrixXd& omega);
Eigen::MatrixXd range_finder(const Eigen::MatrixXd& A, const Eigen::MatrixXd& omega);

/// || A - Q Q^T A ||_F. An empty Q gives ||A||_F.
double project_error(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/// sqrt(sum_{j>k} sigma_j^2) for a nonincreasing list of singular values.
double svd_tail(const Eigen::VectorXd& singular_values, Eigen::Index k);

/// gamma_k for covariance K and an orthonormal n x k basis V1 of the leading
/// right singular subspace. Throws when V1' K V1 is numerically singular
/// (smallest eigenvalue <= 1e-14 * lambda_1): the covariance is blind to the
/// leading right singular subspace and the bound is vacuous.
double gamma_k(const Eigen::MatrixXd& K, const Eigen::MatrixXd& V1);
double gamma_k(const Eigen::MatrixXd& K, const Eigen::MatrixXd& V1, double lambda1);

/// beta_k for covariance K, trailing right singular basis V2 and trailing
/// singular values sigma2. sigma2 == 0 is reported through the optional flag
/// and maps to beta = 0.
double beta_k(const Eigen::MatrixXd& K, const Eigen::MatrixXd& V2,
              const Eigen::VectorXd& sigma2, bool* exact_rank_deficient = nullptr);

/// Upper bound sum_{j>k} (lambda_{j-k}/lambda_1) sigma_j^2 / sum_{j>k} sigma_j^2
/// from the covariance eigenvalues (nonincreasing) and singular values.
double beta_k_upper_bound(const Eigen::VectorXd& cov_eigenvalues,
                          const Eigen::VectorXd& singular_values, Eigen::Index k);

/// Upper bound on 1/gamma_k: (1/k) sum over the k smallest covariance
/// eigenvalues of lambda_1/lambda_j.
double inverse_gamma_upper_bound(const Eigen::VectorXd& cov_eigenvalues, Eigen::Index k);

/// Right-hand side of the selected error bound. Generalized:
///   (1 + u t sqrt((k+p) * 3k/(p+1) * beta/gamma)) * tail.
/// StandardHMT additionally needs sigma_{k+1}:
///   (1 + t sqrt(3k/(p+1))) * tail + u t sqrt(k+p)/(p+1) * sigma_{k+1}.
double bound_rhs(const SketchConfig& cfg, const QualityFactors& qf, double tail,
                 BoundMode mode,
                 double sigma_kp1 = std::numeric_limits<double>::quiet_NaN());

/// Failure probability attached to the bound: t^-p + [u e^{-(u^2-1)/2}]^{k+p}
/// (Generalized) or 2 t^-p + e^{-u^2} (StandardHMT).
double failure_probability(const SketchConfig& cfg, BoundMode mode);

struct McExpectationResult {
    double empirical_mean = 0.0;
    double analytic = 0.0;
    double standard_error = 0.0;
};

/// Monte-Carlo check of E||Sigma2 V2' Omega T||_F^2 = Tr(Sigma2^2 V2' K V2) ||T||_F^2
/// with Omega columns ~ N(0, K).
McExpectationResult mc_expectation_identity(const Eigen::VectorXd& sigma2,
                                            const Eigen::MatrixXd& V2,
                                            const Eigen::MatrixXd& K,
                                            const Eigen::MatrixXd& T, Eigen::Index trials,
                                            RandomSource rng);

struct McTailResult {
    double exceed_rate = 0.0;
    double bound = 0.0;
    double binomial_se = 0.0;
};

/// Empirical exceedance frequency of ||Sigma2 Omega_2||_F^2 over
/// ell (1+s) Tr(Sigma2^2 V2' K V2), against the bound (1+s)^{ell/2} e^{-s ell/2}.
McTailResult mc_tail_bound(const Eigen::VectorXd& sigma2, const Eigen::MatrixXd& V2,
                           const Eigen::MatrixXd& K, Eigen::Index ell, double s,
                           Eigen::Index trials, RandomSource rng);

/// Sketch with k+p multivariate Gaussian columns drawn from N(0, K), project,
/// and report errors plus (when diagnostics are on) the quality factors and
/// the bound evaluated at the config's (t, u).
SketchResult generalized_rsvd(const Eigen::MatrixXd& A, const Eigen::MatrixXd& K,
                              const SketchConfig& cfg, RandomSource rng,
                              bool with_diagnostics = true);
SketchResult generalized_rsvd(const LinearOperator& A, const Eigen::MatrixXd& K,
                              const SketchConfig& cfg, RandomSource rng,
                              bool with_diagnostics = false);

std::string sketch_result_to_json(const SketchResult& r);

} // namespace gsketch
