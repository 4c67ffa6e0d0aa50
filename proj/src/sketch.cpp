#include "gsketch/sketch.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "gsketch/sampling.hpp"

namespace gsketch {

namespace {

void require_bound_params(const SketchConfig& cfg) {
    if (cfg.p < 4)
        throw std::invalid_argument("bound evaluation requires oversampling p >= 4");
    if (!(cfg.t >= 1.0) || !(cfg.u >= 1.0))
        throw std::invalid_argument("bound evaluation requires t >= 1 and u >= 1");
}

double largest_eigenvalue(const Eigen::MatrixXd& K) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(K.rows() - 1);
}

// Tr(Sigma2^2 V2' K V2) without forming the full product.
double trailing_trace(const Eigen::VectorXd& sigma2, const Eigen::MatrixXd& V2,
                      const Eigen::MatrixXd& K) {
    if (V2.cols() != sigma2.size())
        throw std::invalid_argument("trailing trace: V2/sigma2 size mismatch");
    const Eigen::MatrixXd KV2 = K * V2;
    double tr = 0.0;
    for (Eigen::Index i = 0; i < V2.cols(); ++i)
        tr += sigma2[i] * sigma2[i] * V2.col(i).dot(KV2.col(i));
    return tr;
}

} // namespace

LinearOperator dense_operator(const Eigen::MatrixXd& A) {
    LinearOperator op;
    op.rows = A.rows();
    op.cols = A.cols();
    op.apply = [A](const Eigen::MatrixXd& x) { return A * x; };
    op.apply_adjoint = [A](const Eigen::MatrixXd& x) { return A.transpose() * x; };
    return op;
}

Eigen::MatrixXd range_finder(const LinearOperator& A, const Eigen::MatrixXd& omega) {
    if (omega.rows() != A.cols)
        throw std::invalid_argument("range_finder: sketch row count mismatch");
    const Eigen::MatrixXd Y = A.apply(omega);
    const double scale = Y.norm();
    if (scale == 0.0)
        return Eigen::MatrixXd(A.rows, 0);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Y);
    const Eigen::Index kmax = std::min(Y.rows(), Y.cols());
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < kmax; ++i) {
        if (std::abs(qr.matrixR()(i, i)) > 1e-12 * scale)
            ++rank;
        else
            break; // pivoted R diagonal is nonincreasing in magnitude
    }
    if (rank == 0)
        return Eigen::MatrixXd(A.rows, 0);
    return qr.householderQ() * Eigen::MatrixXd::Identity(Y.rows(), rank);
}

Eigen::MatrixXd range_finder(const Eigen::MatrixXd& A, const Eigen::MatrixXd& omega) {
    return range_finder(dense_operator(A), omega);
}

double project_error(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
    if (Q.cols() == 0)
        return A.norm();
    if (Q.rows() != A.rows())
        throw std::invalid_argument("project_error: row count mismatch");
    return (A - Q * (Q.transpose() * A)).norm();
}

double svd_tail(const Eigen::VectorXd& singular_values, Eigen::Index k) {
    if (k < 0 || k > singular_values.size())
        throw std::invalid_argument("svd_tail: rank outside 0..n");
    double s = 0.0;
    for (Eigen::Index j = k; j < singular_values.size(); ++j)
        s += singular_values[j] * singular_values[j];
    return std::sqrt(s);
}

double gamma_k(const Eigen::MatrixXd& K, const Eigen::MatrixXd& V1) {
    return gamma_k(K, V1, largest_eigenvalue(K));
}

double gamma_k(const Eigen::MatrixXd& K, const Eigen::MatrixXd& V1, double lambda1) {
    if (!(lambda1 > 0.0))
        throw std::invalid_argument("gamma_k: covariance has no positive eigenvalue");
    const Eigen::Index k = V1.cols();
    Eigen::MatrixXd M = V1.transpose() * K * V1;
    M = 0.5 * (M + M.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = es.eigenvalues();
    if (ev[0] <= 1e-14 * lambda1)
        throw std::runtime_error("gamma_k: covariance blind to leading right singular subspace");
    double tr_inv = 0.0;
    for (Eigen::Index i = 0; i < k; ++i)
        tr_inv += 1.0 / ev[i];
    return static_cast<double>(k) / (lambda1 * tr_inv);
}

double beta_k(const Eigen::MatrixXd& K, const Eigen::MatrixXd& V2,
              const Eigen::VectorXd& sigma2, bool* exact_rank_deficient) {
    const double s2 = sigma2.squaredNorm();
    if (exact_rank_deficient)
        *exact_rank_deficient = (s2 == 0.0);
    if (s2 == 0.0)
        return 0.0;
    const double lambda1 = largest_eigenvalue(K);
    if (!(lambda1 > 0.0))
        throw std::invalid_argument("beta_k: covariance has no positive eigenvalue");
    return trailing_trace(sigma2, V2, K) / (lambda1 * s2);
}

double beta_k_upper_bound(const Eigen::VectorXd& cov_eigenvalues,
                          const Eigen::VectorXd& singular_values, Eigen::Index k) {
    const Eigen::Index n = singular_values.size();
    if (k < 0 || k >= n)
        throw std::invalid_argument("beta_k_upper_bound: rank outside 0..n-1");
    const double lam1 = cov_eigenvalues[0];
    double num = 0.0, den = 0.0;
    for (Eigen::Index j = k; j < n; ++j) { // j is 0-based; lambda index j-k
        const double s2 = singular_values[j] * singular_values[j];
        num += cov_eigenvalues[j - k] * s2;
        den += s2;
    }
    if (den == 0.0)
        return 0.0;
    return num / (lam1 * den);
}

double inverse_gamma_upper_bound(const Eigen::VectorXd& cov_eigenvalues, Eigen::Index k) {
    const Eigen::Index n = cov_eigenvalues.size();
    if (k < 1 || k > n)
        throw std::invalid_argument("inverse_gamma_upper_bound: rank outside 1..n");
    const double lam1 = cov_eigenvalues[0];
    double s = 0.0;
    for (Eigen::Index j = n - k; j < n; ++j) {
        if (!(cov_eigenvalues[j] > 0.0))
            return std::numeric_limits<double>::infinity();
        s += lam1 / cov_eigenvalues[j];
    }
    return s / static_cast<double>(k);
}

double bound_rhs(const SketchConfig& cfg, const QualityFactors& qf, double tail,
                 BoundMode mode, double sigma_kp1) {
    require_bound_params(cfg);
    const double k = cfg.k, p = cfg.p, t = cfg.t, u = cfg.u;
    if (mode == BoundMode::Generalized) {
        if (!(qf.gamma_k > 0.0))
            throw std::invalid_argument("bound_rhs: gamma must be positive");
        const double ratio = qf.beta_k / qf.gamma_k;
        return (1.0 + u * t * std::sqrt((k + p) * (3.0 * k / (p + 1.0)) * ratio)) * tail;
    }
    if (std::isnan(sigma_kp1))
        throw std::invalid_argument("bound_rhs: standard mode needs sigma_{k+1}");
    return (1.0 + t * std::sqrt(3.0 * k / (p + 1.0))) * tail +
           u * t * (std::sqrt(k + p) / (p + 1.0)) * sigma_kp1;
}

double failure_probability(const SketchConfig& cfg, BoundMode mode) {
    if (!(cfg.t >= 1.0) || !(cfg.u >= 1.0))
        throw std::invalid_argument("failure_probability: requires t, u >= 1");
    const double k = cfg.k, p = cfg.p, t = cfg.t, u = cfg.u;
    if (mode == BoundMode::Generalized)
        return std::pow(t, -p) + std::pow(u * std::exp(-(u * u - 1.0) / 2.0), k + p);
    return 2.0 * std::pow(t, -p) + std::exp(-u * u);
}

McExpectationResult mc_expectation_identity(const Eigen::VectorXd& sigma2,
                                            const Eigen::MatrixXd& V2,
                                            const Eigen::MatrixXd& K,
                                            const Eigen::MatrixXd& T, Eigen::Index trials,
                                            RandomSource rng) {
    if (trials < 1)
        throw std::invalid_argument("mc_expectation_identity: need at least one trial");
    const Eigen::Index ell = T.rows();
    const FactoredCovariance fac = factor_covariance(K);

    McExpectationResult out;
    out.analytic = trailing_trace(sigma2, V2, K) * T.squaredNorm();

    double sum = 0.0, sumsq = 0.0;
    for (Eigen::Index tr = 0; tr < trials; ++tr) {
        const Eigen::MatrixXd omega = draw_mvn_matrix(fac, rng.child(static_cast<std::uint64_t>(tr)), ell);
        const double v = (sigma2.asDiagonal() * (V2.transpose() * omega) * T).squaredNorm();
        sum += v;
        sumsq += v * v;
    }
    const double n = static_cast<double>(trials);
    out.empirical_mean = sum / n;
    const double var = std::max(0.0, sumsq / n - out.empirical_mean * out.empirical_mean);
    out.standard_error = std::sqrt(var / n);
    return out;
}

McTailResult mc_tail_bound(const Eigen::VectorXd& sigma2, const Eigen::MatrixXd& V2,
                           const Eigen::MatrixXd& K, Eigen::Index ell, double s,
                           Eigen::Index trials, RandomSource rng) {
    if (trials < 1)
        throw std::invalid_argument("mc_tail_bound: need at least one trial");
    if (s < 0.0)
        throw std::invalid_argument("mc_tail_bound: s must be nonnegative");
    const FactoredCovariance fac = factor_covariance(K);
    const double c1 = trailing_trace(sigma2, V2, K);
    const double threshold = static_cast<double>(ell) * (1.0 + s) * c1;

    Eigen::Index exceed = 0;
    for (Eigen::Index tr = 0; tr < trials; ++tr) {
        const Eigen::MatrixXd omega = draw_mvn_matrix(fac, rng.child(static_cast<std::uint64_t>(tr)), ell);
        const double v = (sigma2.asDiagonal() * (V2.transpose() * omega)).squaredNorm();
        if (v > threshold)
            ++exceed;
    }
    McTailResult out;
    out.exceed_rate = static_cast<double>(exceed) / static_cast<double>(trials);
    out.bound = std::pow(1.0 + s, static_cast<double>(ell) / 2.0) *
                std::exp(-s * static_cast<double>(ell) / 2.0);
    out.binomial_se =
        std::sqrt(out.exceed_rate * (1.0 - out.exceed_rate) / static_cast<double>(trials));
    return out;
}

SketchResult generalized_rsvd(const Eigen::MatrixXd& A, const Eigen::MatrixXd& K,
                              const SketchConfig& cfg, RandomSource rng,
                              bool with_diagnostics) {
    const Eigen::Index n = A.cols();
    if (K.rows() != n || K.cols() != n)
        throw std::invalid_argument("generalized_rsvd: covariance dimension mismatch");
    if (cfg.k < 1 || cfg.p < 0)
        throw std::invalid_argument("generalized_rsvd: need k >= 1 and p >= 0");
    if (cfg.k + cfg.p > n)
        throw std::invalid_argument("generalized_rsvd: k + p exceeds column count");

    const FactoredCovariance fac = factor_covariance(K);

    SketchResult r;
    r.k = cfg.k;
    r.p = cfg.p;
    r.seed = rng.seed;
    r.omega = draw_mvn_matrix(fac, rng, cfg.k + cfg.p);
    r.factors.Q = range_finder(A, r.omega);
    r.factors.B = r.factors.Q.transpose() * A;
    r.error_fro = (A - r.factors.Q * r.factors.B).norm();
    const double a_norm = A.norm();
    r.error_rel = a_norm > 0.0 ? r.error_fro / a_norm : 0.0;

    if (with_diagnostics) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinV);
        const Eigen::VectorXd& sv = svd.singularValues();
        r.tail = svd_tail(sv, cfg.k);
        const Eigen::MatrixXd V1 = svd.matrixV().leftCols(cfg.k);
        const Eigen::MatrixXd V2 = svd.matrixV().rightCols(n - cfg.k);
        const Eigen::VectorXd sigma2 = sv.tail(n - cfg.k);

        QualityFactors qf;
        qf.lambda1 = fac.rank() > 0
                         ? fac.sqrt_eigenvalues[0] * fac.sqrt_eigenvalues[0]
                         : 0.0;
        qf.gamma_k = gamma_k(K, V1, qf.lambda1);
        qf.beta_k = beta_k(K, V2, sigma2, &qf.exact_rank_deficient);
        r.gamma_k = qf.gamma_k;
        r.beta_k = qf.beta_k;
        r.bound_rhs = bound_rhs(cfg, qf, r.tail, BoundMode::Generalized);
        r.has_diagnostics = true;
    }
    return r;
}

SketchResult generalized_rsvd(const LinearOperator& A, const Eigen::MatrixXd& K,
                              const SketchConfig& cfg, RandomSource rng,
                              bool with_diagnostics) {
    if (with_diagnostics) {
        // gridded instantiation so the SVD-based diagnostics are available
        const Eigen::MatrixXd dense =
            A.apply(Eigen::MatrixXd::Identity(A.cols, A.cols));
        return generalized_rsvd(dense, K, cfg, rng, true);
    }
    const Eigen::Index n = A.cols;
    if (K.rows() != n || K.cols() != n)
        throw std::invalid_argument("generalized_rsvd: covariance dimension mismatch");
    if (cfg.k < 1 || cfg.p < 0 || cfg.k + cfg.p > n)
        throw std::invalid_argument("generalized_rsvd: invalid (k, p) for operator size");

    const FactoredCovariance fac = factor_covariance(K);

    SketchResult r;
    r.k = cfg.k;
    r.p = cfg.p;
    r.seed = rng.seed;
    r.omega = draw_mvn_matrix(fac, rng, cfg.k + cfg.p);
    r.factors.Q = range_finder(A, r.omega);
    r.factors.B = A.apply_adjoint(r.factors.Q).transpose();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.error_fro = nan;
    r.error_rel = nan;
    r.tail = nan;
    r.gamma_k = nan;
    r.beta_k = nan;
    r.bound_rhs = nan;
    return r;
}

std::string sketch_result_to_json(const SketchResult& r) {
    nlohmann::ordered_json j;
    j["k"] = r.k;
    j["p"] = r.p;
    j["error_fro"] = r.error_fro;
    j["error_rel"] = r.error_rel;
    j["tail"] = r.tail;
    j["gamma_k"] = r.gamma_k;
    j["beta_k"] = r.beta_k;
    j["bound_rhs"] = r.bound_rhs;
    j["seed"] = r.seed;
    return j.dump();
}

} // namespace gsketch
