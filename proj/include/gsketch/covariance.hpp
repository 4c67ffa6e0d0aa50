#pragma once

#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "gsketch/eigen_sequence.hpp"
#include "gsketch/quadrature.hpp"

namespace nlohmann {
template <typename T, typename SFINAE> struct adl_serializer;
}

namespace gsketch {

/// A covariance kernel, either in closed form (squared-exponential,
/// periodic), in Mercer form (weighted Jacobi basis or the Dirichlet
/// Laplacian's Green eigenbasis with a designed eigenvalue sequence), or as
/// an explicit PSD matrix tied to a particular grid.
class CovarianceSpec {
  public:
    enum class Form { SqExp, Periodic, JacobiMercer, LaplaceGreen, ExplicitMatrix };

    static CovarianceSpec sqexp(double ell, double a = -1.0, double b = 1.0);
    static CovarianceSpec periodic(double ell, double a = 0.0,
                                   double b = 2.0 * 3.141592653589793238462643383279502884);
    /// alpha must be an even nonnegative integer; both Jacobi parameters are
    /// set to alpha so the kernel satisfies K(x,y) = K(-y,-x).
    static CovarianceSpec jacobi_mercer(int alpha, EigenSequence seq);
    static CovarianceSpec laplace_green(std::size_t n);
    static CovarianceSpec explicit_matrix(Eigen::MatrixXd K);

    Form form() const { return form_; }
    double ell() const { return ell_; }
    int alpha() const { return alpha_; }
    std::size_t mercer_terms() const;
    const EigenSequence& sequence() const;
    const Eigen::MatrixXd& matrix() const;
    double domain_a() const { return a_; }
    double domain_b() const { return b_; }
    std::string form_name() const;

  private:
    CovarianceSpec() = default;

    Form form_ = Form::SqExp;
    double ell_ = 1.0;
    int alpha_ = 2;
    std::optional<EigenSequence> seq_;
    std::size_t green_terms_ = 0;
    Eigen::MatrixXd matrix_;
    double a_ = -1.0;
    double b_ = 1.0;
};

/// Closed-form kernel value; defined for SqExp and Periodic specs only, with
/// x, y inside the spec's domain.
double kernel_eval(const CovarianceSpec& spec, double x, double y);

/// w_{a,a}(x)^{1/2} * Ptilde_j^{(a,a)}(x): the degree-j Jacobi polynomial
/// (three-term recurrence) scaled so the weighted function has unit L2 norm
/// on [-1,1], times the half-weight (1-x^2)^{a/2}. Requires |x| <= 1 and
/// even nonnegative a.
double jacobi_poly_weighted(int j, int alpha, double x);

/// Matrix of w^{1/2}Ptilde_j(x_i) for j = 0..nmax-1 over the given nodes.
/// One recurrence pass per node, so this is the preferred bulk interface.
Eigen::MatrixXd jacobi_weighted_basis(int nmax, int alpha, const Eigen::VectorXd& nodes);

/// Truncated Mercer sum sum_{j<n} lambda_{j+1} phi_j(x) phi_j(y) with
/// phi_j = w^{1/2}Ptilde_j. Logs a one-time warning for alpha = 2 when the
/// sequence fails the sum_j j*lambda_j convergence heuristic.
double jacobi_kernel_eval(int alpha, const EigenSequence& seq, double x, double y);

struct EigenPair1D {
    double value;
    std::function<double(double)> fn;
};

/// n-th eigenpair of the Green's function of -d^2/dx^2 with homogeneous
/// Dirichlet conditions on [0,1].
EigenPair1D laplace_green_eigen(std::size_t n);

/// Pointwise covariance matrix K(x_i, x_j) on the grid nodes. Mercer forms
/// are assembled as Phi diag(lambda) Phi^T; closed-form kernels are sampled
/// directly; the explicit form must match the node count. Symmetric by
/// construction.
Eigen::MatrixXd discretize_covariance(const CovarianceSpec& spec, const QuadratureGrid& grid);

/// Count of eigenvalues of the weighted eigenproblem
/// W^{1/2} K W^{1/2} v = lambda v exceeding relative_tol * lambda_max.
Eigen::Index covariance_numerical_rank(const Eigen::MatrixXd& K, const QuadratureGrid& grid,
                                       double relative_tol);

std::string covariance_to_json(const CovarianceSpec& spec);
CovarianceSpec covariance_from_json(const std::string& text);

} // namespace gsketch
