#pragma once

#include <string>

#include <Eigen/Dense>

#include "gsketch/covariance.hpp"
#include "gsketch/quadrature.hpp"
#include "gsketch/rng.hpp"
#include "gsketch/sampling.hpp"

namespace gsketch {

/// Bivariate kernel tabulated on a grid pair, standing in for the integral
/// operator (F f)(x) = int G(x,y) f(y) dy under the grids' quadrature rules.
struct DiscretizedKernel {
    QuadratureGrid grid_x;
    QuadratureGrid grid_y;
    Eigen::MatrixXd values; // values(i, j) = G(x_i, y_j)
    std::string provenance; // "builtin:<name>" or "tabulated:<path>"
};

/// Low-rank factorization G_k(x,y) = sum_i Q(x,i) B(i,y) produced by the
/// randomized sweep; Q columns are orthonormal under grid_x's weights.
struct LearnedKernel {
    QuadratureGrid grid_x;
    QuadratureGrid grid_y;
    Eigen::MatrixXd Q; // m x r
    Eigen::MatrixXd B; // r x n
    Eigen::Index rank = 0;
};

/// J_0 via trapezoid quadrature of (1/pi) int_0^pi cos(x sin t) dt with the
/// node count scaled to |x|; accurate to ~1e-12 absolute for |x| <= 1e4.
double bessel_j0(double x);

/// Builtin kernels ("cossin", "bessel") sampled on the grid tensor product.
DiscretizedKernel build_kernel(const std::string& builtin, const QuadratureGrid& grid_x,
                               const QuadratureGrid& grid_y);

/// Tabulated-kernel CSV ingestion/emission. Header lines carry the node
/// locations and grid family; weights are recomputed from the family.
DiscretizedKernel read_tabulated_kernel(const std::string& path);
void write_tabulated_kernel(const std::string& path, const QuadratureGrid& grid_x,
                            const QuadratureGrid& grid_y, const Eigen::MatrixXd& values);

/// (F f)(x_i) = sum_j w_j G(x_i, y_j) f(y_j).
Eigen::VectorXd apply_operator(const DiscretizedKernel& K, const Eigen::VectorXd& f);
Eigen::MatrixXd apply_operator(const DiscretizedKernel& K, const Eigen::MatrixXd& F);

/// (F_t q)(y_j) = sum_i w_i G(x_i, y_j) q(x_i).
Eigen::VectorXd apply_adjoint(const DiscretizedKernel& K, const Eigen::VectorXd& q);
Eigen::MatrixXd apply_adjoint(const DiscretizedKernel& K, const Eigen::MatrixXd& Q);

/// Orthonormalize columns under the weighted inner product; near-dependent
/// columns are dropped at 1e-12 relative.
Eigen::MatrixXd weighted_qr(const Eigen::MatrixXd& Y, const Eigen::VectorXd& weights);

/// The randomized low-rank sweep for the integral operator: sample k GP
/// functions on grid_y, push them through the operator, orthonormalize under
/// grid_x's weights, and assemble G_k from the adjoint applications.
LearnedKernel hs_randomized_svd(const DiscretizedKernel& K, const CovarianceSpec& cov,
                                Eigen::Index k, RandomSource rng);
/// Same sweep with a prefactored covariance on grid_y (reusable across k).
LearnedKernel hs_randomized_svd(const DiscretizedKernel& K, const FactoredCovariance& fac,
                                Eigen::Index k, RandomSource rng);

struct L2Error {
    double absolute = 0.0;
    double relative = 0.0;
};

/// Weighted L2 (Hilbert-Schmidt) distance between the kernel and the learned
/// approximation, plus the relative form.
L2Error l2_error(const DiscretizedKernel& K, const LearnedKernel& L);

/// Weighted L2 norm of the kernel itself.
double l2_norm(const DiscretizedKernel& K);

/// Weighted singular values of the kernel: singular values of
/// diag(sqrt(wx)) G diag(sqrt(wy)).
Eigen::VectorXd weighted_singular_values(const DiscretizedKernel& K);

/// Count of weighted singular values above relative_tol * sigma_1.
Eigen::Index kernel_numerical_rank(const DiscretizedKernel& K, double relative_tol);
Eigen::Index learned_kernel_numerical_rank(const LearnedKernel& L, double relative_tol);

} // namespace gsketch
