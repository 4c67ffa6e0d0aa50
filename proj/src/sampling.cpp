#include "gsketch/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace gsketch {

FactoredCovariance factor_covariance(const Eigen::MatrixXd& K) {
    if (K.rows() != K.cols())
        throw std::invalid_argument("factor_covariance: matrix must be square");
    const Eigen::Index n = K.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("factor_covariance: eigen-decomposition failed");

    const Eigen::VectorXd& ev = es.eigenvalues(); // ascending
    const double lam1 = ev[n - 1];
    if (lam1 > 0.0 && ev[0] < -1e-6 * lam1)
        throw std::runtime_error("factor_covariance: covariance is materially indefinite");

    const double cutoff = lam1 > 0.0 ? std::exp2(-52) * lam1 : 0.0;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (ev[i] > cutoff) ++r;

    FactoredCovariance fac;
    fac.dim = n;
    fac.basis.resize(n, r);
    fac.sqrt_eigenvalues.resize(r);
    for (Eigen::Index k = 0; k < r; ++k) {
        const Eigen::Index src = n - 1 - k; // descending order
        Eigen::VectorXd v = es.eigenvectors().col(src);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0.0) v = -v;
        fac.basis.col(k) = v;
        fac.sqrt_eigenvalues[k] = std::sqrt(ev[src]);
    }
    return fac;
}

Eigen::MatrixXd draw_mvn_matrix(const FactoredCovariance& fac, RandomSource rng,
                                Eigen::Index count) {
    if (count < 1)
        throw std::invalid_argument("draw_mvn_matrix: count must be >= 1");
    if (fac.rank() == 0)
        return Eigen::MatrixXd::Zero(fac.dim, count);
    Eigen::MatrixXd g = standard_normal_matrix(fac.rank(), count, rng);
    return fac.basis * (fac.sqrt_eigenvalues.asDiagonal() * g);
}

Eigen::VectorXd sample_gp_function(const CovarianceSpec& spec, const QuadratureGrid& grid,
                                   RandomSource rng) {
    using Form = CovarianceSpec::Form;
    if (spec.form() == Form::JacobiMercer) {
        const int terms = static_cast<int>(spec.mercer_terms());
        Eigen::MatrixXd phi = jacobi_weighted_basis(terms, spec.alpha(), grid.nodes);
        Eigen::VectorXd c = standard_normal_matrix(terms, 1, rng);
        for (int j = 0; j < terms; ++j)
            c[j] *= std::sqrt(eigen_sequence_eval(spec.sequence(),
                                                  static_cast<std::size_t>(j) + 1));
        return phi * c;
    }
    if (spec.form() == Form::LaplaceGreen) {
        const Eigen::Index terms = static_cast<Eigen::Index>(spec.mercer_terms());
        Eigen::VectorXd c = standard_normal_matrix(terms, 1, rng);
        Eigen::VectorXd u = Eigen::VectorXd::Zero(grid.size());
        for (Eigen::Index q = 0; q < terms; ++q) {
            const auto pair = laplace_green_eigen(static_cast<std::size_t>(q) + 1);
            const double amp = std::sqrt(pair.value) * c[q];
            for (Eigen::Index i = 0; i < grid.size(); ++i)
                u[i] += amp * pair.fn(grid.nodes[i]);
        }
        return u;
    }
    const Eigen::MatrixXd K = discretize_covariance(spec, grid);
    const FactoredCovariance fac = factor_covariance(K);
    return draw_mvn_matrix(fac, rng, 1).col(0);
}

double truncation_tail_sup(const EigenSequence& seq, Eigen::Index n,
                           const Eigen::VectorXd& coeffs) {
    if (seq.kind() != EigenSequence::Kind::PowerLaw)
        throw std::invalid_argument(
            "truncation_tail_sup: needs a power-law sequence (no decay constant otherwise)");
    if (n < 0)
        throw std::invalid_argument("truncation_tail_sup: negative truncation index");
    const double nu = seq.nu();

    // realized bound constant: lambda_{j+1} (j+1)^nu over the sequence
    double M = 0.0;
    for (std::size_t j = 1; j <= seq.truncation(); ++j) {
        const double v = eigen_sequence_eval(seq, j) *
                         std::pow(static_cast<double>(j), nu);
        M = std::max(M, v);
    }

    const Eigen::Index len = coeffs.size();
    double sum = 0.0;
    for (Eigen::Index j = n + 2; j <= len; ++j)
        sum += std::abs(coeffs[j - 1]) *
               std::pow(static_cast<double>(j), 0.5 * (1.0 - nu));
    return 2.0 * std::sqrt(M) * sum;
}

} // namespace gsketch
