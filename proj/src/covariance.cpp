#include "gsketch/covariance.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace gsketch {

namespace {

constexpr double kPi = std::numbers::pi;

void require_even_nonneg(int alpha) {
    if (alpha < 0 || alpha % 2 != 0)
        throw std::invalid_argument("jacobi parameter must be an even nonnegative integer");
}

// ||P_j^{(a,a)}||^2 under the weight (1-x^2)^a on [-1,1].
double jacobi_norm_sq(int j, int a) {
    const double jd = j, ad = a;
    return std::exp((2.0 * ad + 1.0) * std::numbers::ln2 - std::log(2.0 * jd + 2.0 * ad + 1.0) +
                    2.0 * std::lgamma(jd + ad + 1.0) - std::lgamma(jd + 2.0 * ad + 1.0) -
                    std::lgamma(jd + 1.0));
}

// Unnormalized P_j^{(a,a)}(x) for all degrees 0..nmax-1 at a single point,
// written into out[]. Standard three-term recurrence.
void jacobi_recurrence(int nmax, int a, double x, double* out) {
    if (nmax <= 0) return;
    out[0] = 1.0;
    if (nmax == 1) return;
    out[1] = (a + 1.0) * x;
    for (int m = 2; m < nmax; ++m) {
        const double md = m, ad = a;
        const double a1 = 2.0 * md * (md + 2.0 * ad) * (2.0 * md + 2.0 * ad - 2.0);
        const double a2 =
            (2.0 * md + 2.0 * ad - 1.0) * (2.0 * md + 2.0 * ad) * (2.0 * md + 2.0 * ad - 2.0);
        const double a4 = 2.0 * (md - 1.0 + ad) * (md - 1.0 + ad) * (2.0 * md + 2.0 * ad);
        out[m] = (a2 * x * out[m - 1] - a4 * out[m - 2]) / a1;
    }
}

} // namespace

CovarianceSpec CovarianceSpec::sqexp(double ell, double a, double b) {
    if (!(ell > 0.0))
        throw std::invalid_argument("sqexp covariance: length scale must be positive");
    if (!(b > a))
        throw std::invalid_argument("sqexp covariance: degenerate domain");
    CovarianceSpec s;
    s.form_ = Form::SqExp;
    s.ell_ = ell;
    s.a_ = a;
    s.b_ = b;
    return s;
}

CovarianceSpec CovarianceSpec::periodic(double ell, double a, double b) {
    if (!(ell > 0.0))
        throw std::invalid_argument("periodic covariance: length scale must be positive");
    if (!(b > a))
        throw std::invalid_argument("periodic covariance: degenerate domain");
    CovarianceSpec s;
    s.form_ = Form::Periodic;
    s.ell_ = ell;
    s.a_ = a;
    s.b_ = b;
    return s;
}

CovarianceSpec CovarianceSpec::jacobi_mercer(int alpha, EigenSequence seq) {
    require_even_nonneg(alpha);
    CovarianceSpec s;
    s.form_ = Form::JacobiMercer;
    s.alpha_ = alpha;
    s.seq_ = std::move(seq);
    s.a_ = -1.0;
    s.b_ = 1.0;
    return s;
}

CovarianceSpec CovarianceSpec::laplace_green(std::size_t n) {
    if (n == 0)
        throw std::invalid_argument("laplace_green covariance: need at least one term");
    CovarianceSpec s;
    s.form_ = Form::LaplaceGreen;
    s.green_terms_ = n;
    s.a_ = 0.0;
    s.b_ = 1.0;
    return s;
}

CovarianceSpec CovarianceSpec::explicit_matrix(Eigen::MatrixXd K) {
    if (K.rows() != K.cols())
        throw std::invalid_argument("explicit covariance: matrix must be square");
    CovarianceSpec s;
    s.form_ = Form::ExplicitMatrix;
    s.matrix_ = std::move(K);
    s.a_ = -1.0;
    s.b_ = 1.0;
    return s;
}

std::size_t CovarianceSpec::mercer_terms() const {
    if (form_ == Form::JacobiMercer) return seq_->truncation();
    if (form_ == Form::LaplaceGreen) return green_terms_;
    throw std::logic_error("mercer_terms: spec has no Mercer representation");
}

const EigenSequence& CovarianceSpec::sequence() const {
    if (!seq_)
        throw std::logic_error("CovarianceSpec: no eigenvalue sequence");
    return *seq_;
}

const Eigen::MatrixXd& CovarianceSpec::matrix() const {
    if (form_ != Form::ExplicitMatrix)
        throw std::logic_error("CovarianceSpec: no explicit matrix");
    return matrix_;
}

std::string CovarianceSpec::form_name() const {
    switch (form_) {
        case Form::SqExp: return "sqexp";
        case Form::Periodic: return "periodic";
        case Form::JacobiMercer: return "jacobi";
        case Form::LaplaceGreen: return "laplace_green";
        case Form::ExplicitMatrix: return "matrix";
    }
    return "unknown";
}

double kernel_eval(const CovarianceSpec& spec, double x, double y) {
    if (spec.form() != CovarianceSpec::Form::SqExp &&
        spec.form() != CovarianceSpec::Form::Periodic)
        throw std::invalid_argument("kernel_eval: spec has no closed form");
    const double a = spec.domain_a(), b = spec.domain_b();
    if (x < a || x > b || y < a || y > b)
        throw std::invalid_argument("kernel_eval: point outside kernel domain");
    const double ell = spec.ell();
    if (spec.form() == CovarianceSpec::Form::SqExp) {
        const double d = x - y;
        return std::exp(-d * d / (2.0 * ell * ell));
    }
    const double s = std::sin(0.5 * (x - y));
    return std::exp(-2.0 * s * s / (ell * ell));
}

double jacobi_poly_weighted(int j, int alpha, double x) {
    require_even_nonneg(alpha);
    if (j < 0)
        throw std::invalid_argument("jacobi_poly_weighted: negative degree");
    if (x < -1.0 || x > 1.0)
        throw std::invalid_argument("jacobi_poly_weighted: point outside [-1,1]");
    std::vector<double> p(static_cast<std::size_t>(j) + 1);
    jacobi_recurrence(j + 1, alpha, x, p.data());
    const double half_weight = std::pow(1.0 - x * x, alpha / 2);
    return half_weight * p[static_cast<std::size_t>(j)] / std::sqrt(jacobi_norm_sq(j, alpha));
}

Eigen::MatrixXd jacobi_weighted_basis(int nmax, int alpha, const Eigen::VectorXd& nodes) {
    require_even_nonneg(alpha);
    if (nmax <= 0)
        throw std::invalid_argument("jacobi_weighted_basis: need nmax >= 1");
    Eigen::MatrixXd phi(nodes.size(), nmax);
    std::vector<double> scale(static_cast<std::size_t>(nmax));
    for (int j = 0; j < nmax; ++j)
        scale[static_cast<std::size_t>(j)] = 1.0 / std::sqrt(jacobi_norm_sq(j, alpha));
    std::vector<double> p(static_cast<std::size_t>(nmax));
    for (Eigen::Index i = 0; i < nodes.size(); ++i) {
        const double x = nodes[i];
        if (x < -1.0 || x > 1.0)
            throw std::invalid_argument("jacobi_weighted_basis: node outside [-1,1]");
        jacobi_recurrence(nmax, alpha, x, p.data());
        const double half_weight = std::pow(1.0 - x * x, alpha / 2);
        for (int j = 0; j < nmax; ++j)
            phi(i, j) = half_weight * p[static_cast<std::size_t>(j)] *
                        scale[static_cast<std::size_t>(j)];
    }
    return phi;
}

double jacobi_kernel_eval(int alpha, const EigenSequence& seq, double x, double y) {
    require_even_nonneg(alpha);
    if (x < -1.0 || x > 1.0 || y < -1.0 || y > 1.0)
        throw std::invalid_argument("jacobi_kernel_eval: point outside [-1,1]");
    const int n = static_cast<int>(seq.truncation());
    if (alpha == 2 && !jacobi_series_tail_ok(seq)) {
        static std::atomic<bool> warned{false};
        if (!warned.exchange(true))
            std::clog << "gsketch: warning: sum_j j*lambda_j looks divergent for the "
                         "boundary-vanishing kernel; samples may lose continuity\n";
    }
    std::vector<double> px(static_cast<std::size_t>(n)), py(static_cast<std::size_t>(n));
    jacobi_recurrence(n, alpha, x, px.data());
    jacobi_recurrence(n, alpha, y, py.data());
    const double wx = std::pow(1.0 - x * x, alpha / 2);
    const double wy = std::pow(1.0 - y * y, alpha / 2);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
        const double lam = eigen_sequence_eval(seq, static_cast<std::size_t>(j) + 1);
        sum += lam * px[static_cast<std::size_t>(j)] * py[static_cast<std::size_t>(j)] /
               jacobi_norm_sq(j, alpha);
    }
    return wx * wy * sum;
}

EigenPair1D laplace_green_eigen(std::size_t n) {
    if (n < 1)
        throw std::invalid_argument("laplace_green_eigen: index must be >= 1");
    const double nd = static_cast<double>(n);
    return {1.0 / (kPi * kPi * nd * nd),
            [nd](double x) { return std::sqrt(2.0) * std::sin(nd * kPi * x); }};
}

Eigen::MatrixXd discretize_covariance(const CovarianceSpec& spec, const QuadratureGrid& grid) {
    const Eigen::Index n = grid.size();
    if (spec.form() != CovarianceSpec::Form::ExplicitMatrix) {
        const double tol = 1e-12 * (grid.b - grid.a);
        if (grid.nodes[0] < spec.domain_a() - tol || grid.nodes[n - 1] > spec.domain_b() + tol)
            throw std::invalid_argument("discretize_covariance: grid outside kernel domain");
    }

    Eigen::MatrixXd K;
    switch (spec.form()) {
        case CovarianceSpec::Form::SqExp:
        case CovarianceSpec::Form::Periodic: {
            K.resize(n, n);
            for (Eigen::Index i = 0; i < n; ++i) {
                K(i, i) = 1.0; // both closed forms are 1 on the diagonal
                for (Eigen::Index j = i + 1; j < n; ++j) {
                    const double v = kernel_eval(spec, grid.nodes[i], grid.nodes[j]);
                    K(i, j) = v;
                    K(j, i) = v;
                }
            }
            return K;
        }
        case CovarianceSpec::Form::JacobiMercer: {
            const int terms = static_cast<int>(spec.mercer_terms());
            if (spec.alpha() == 2 && !jacobi_series_tail_ok(spec.sequence()))
                std::clog << "gsketch: warning: sum_j j*lambda_j looks divergent for the "
                             "boundary-vanishing kernel; samples may lose continuity\n";
            Eigen::MatrixXd phi = jacobi_weighted_basis(terms, spec.alpha(), grid.nodes);
            const auto vals = eigen_sequence_values(spec.sequence());
            const Eigen::VectorXd lam = Eigen::Map<const Eigen::VectorXd>(vals.data(), terms);
            K = phi * lam.asDiagonal() * phi.transpose();
            break;
        }
        case CovarianceSpec::Form::LaplaceGreen: {
            const Eigen::Index m = static_cast<Eigen::Index>(spec.mercer_terms());
            Eigen::MatrixXd psi(n, m);
            Eigen::VectorXd lam(m);
            for (Eigen::Index q = 0; q < m; ++q) {
                const auto pair = laplace_green_eigen(static_cast<std::size_t>(q) + 1);
                lam[q] = pair.value;
                for (Eigen::Index i = 0; i < n; ++i)
                    psi(i, q) = pair.fn(grid.nodes[i]);
            }
            K = psi * lam.asDiagonal() * psi.transpose();
            break;
        }
        case CovarianceSpec::Form::ExplicitMatrix: {
            if (spec.matrix().rows() != n)
                throw std::invalid_argument("discretize_covariance: matrix/grid size mismatch");
            K = spec.matrix();
            break;
        }
    }
    K = 0.5 * (K + K.transpose()).eval();
    return K;
}

Eigen::Index covariance_numerical_rank(const Eigen::MatrixXd& K, const QuadratureGrid& grid,
                                       double relative_tol) {
    if (K.rows() != K.cols() || K.rows() != grid.size())
        throw std::invalid_argument("covariance_numerical_rank: size mismatch");
    if (!(relative_tol > 0.0 && relative_tol < 1.0))
        throw std::invalid_argument("covariance_numerical_rank: tolerance outside (0,1)");
    const double scale = K.cwiseAbs().maxCoeff();
    if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1e-300))
        throw std::invalid_argument("covariance_numerical_rank: matrix not symmetric");

    const Eigen::VectorXd sw = grid.weights.cwiseSqrt();
    Eigen::MatrixXd B = sw.asDiagonal() * K * sw.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double lam_max = ev[ev.size() - 1];
    if (!(lam_max > 0.0))
        return 0;
    const double thr = relative_tol * lam_max;
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev[i] > thr) ++count;
    return count;
}

std::string covariance_to_json(const CovarianceSpec& spec) {
    nlohmann::ordered_json j;
    j["form"] = spec.form_name();
    switch (spec.form()) {
        case CovarianceSpec::Form::SqExp:
        case CovarianceSpec::Form::Periodic:
            j["ell"] = spec.ell();
            break;
        case CovarianceSpec::Form::JacobiMercer: {
            j["alpha"] = spec.alpha();
            nlohmann::ordered_json s;
            s["kind"] = spec.sequence().kind_name();
            if (spec.sequence().kind() == EigenSequence::Kind::PowerLaw)
                s["nu"] = spec.sequence().nu();
            if (spec.sequence().kind() == EigenSequence::Kind::Explicit)
                s["values"] = spec.sequence().values();
            s["n"] = spec.sequence().truncation();
            j["seq"] = s;
            break;
        }
        case CovarianceSpec::Form::LaplaceGreen:
            j["n"] = spec.mercer_terms();
            break;
        case CovarianceSpec::Form::ExplicitMatrix: {
            const auto& m = spec.matrix();
            std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                rows[static_cast<std::size_t>(r)].assign(m.row(r).begin(), m.row(r).end());
            }
            j["values"] = rows;
            break;
        }
    }
    j["domain"] = {spec.domain_a(), spec.domain_b()};
    return j.dump();
}

namespace {

EigenSequence sequence_from_json(const nlohmann::json& s) {
    const std::string kind = s.at("kind").get<std::string>();
    if (kind == "explicit")
        return EigenSequence::explicit_values(s.at("values").get<std::vector<double>>());
    const std::size_t n = s.at("n").get<std::size_t>();
    if (kind == "rissanen") return EigenSequence::rissanen(n);
    if (kind == "scaled_rissanen") return EigenSequence::scaled_rissanen(n);
    if (kind == "power_law") return EigenSequence::power_law(s.at("nu").get<double>(), n);
    throw std::invalid_argument("covariance_from_json: unknown sequence kind '" + kind + "'");
}

} // namespace

CovarianceSpec covariance_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    const std::string form = j.at("form").get<std::string>();
    double a = -1.0, b = 1.0;
    if (j.contains("domain")) {
        a = j["domain"].at(0).get<double>();
        b = j["domain"].at(1).get<double>();
    }
    if (form == "sqexp") return CovarianceSpec::sqexp(j.at("ell").get<double>(), a, b);
    if (form == "periodic") return CovarianceSpec::periodic(j.at("ell").get<double>(), a, b);
    if (form == "jacobi")
        return CovarianceSpec::jacobi_mercer(j.at("alpha").get<int>(),
                                             sequence_from_json(j.at("seq")));
    if (form == "laplace_green") return CovarianceSpec::laplace_green(j.at("n").get<std::size_t>());
    if (form == "matrix") {
        const auto rows = j.at("values").get<std::vector<std::vector<double>>>();
        const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index r = 0; r < n; ++r) {
            if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != n)
                throw std::invalid_argument("covariance_from_json: ragged matrix");
            for (Eigen::Index c = 0; c < n; ++c)
                m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
        return CovarianceSpec::explicit_matrix(std::move(m));
    }
    throw std::invalid_argument("covariance_from_json: unknown form '" + form + "'");
}

} // namespace gsketch
