#include "gsketch/hsop.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gsketch {

namespace {

constexpr double kPi = std::numbers::pi;

void check_grid_pair(const DiscretizedKernel& K) {
    if (K.values.rows() != K.grid_x.size() || K.values.cols() != K.grid_y.size())
        throw std::invalid_argument("kernel values do not match the grid pair");
}

Eigen::VectorXd parse_node_line(const std::string& line, const std::string& tag) {
    const auto pos = line.find(tag);
    if (pos == std::string::npos)
        throw std::invalid_argument("tabulated kernel: missing header '" + tag + "'");
    std::vector<double> vals;
    std::stringstream ss(line.substr(pos + tag.size()));
    std::string tok;
    while (std::getline(ss, tok, ','))
        vals.push_back(std::stod(tok));
    if (vals.size() < 2)
        throw std::invalid_argument("tabulated kernel: fewer than 2 nodes");
    return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

// Weights for externally supplied nodes: recomputed from the declared family
// on [first, last]; the nodes themselves are kept verbatim.
QuadratureGrid grid_from_nodes(const Eigen::VectorXd& nodes, GridFamily family) {
    for (Eigen::Index i = 1; i < nodes.size(); ++i)
        if (!(nodes[i] > nodes[i - 1]))
            throw std::invalid_argument("tabulated kernel: nodes not strictly increasing");
    QuadratureGrid ref = make_grid(family, nodes.size(), nodes[0], nodes[nodes.size() - 1]);
    ref.nodes = nodes;
    return ref;
}

} // namespace

double bessel_j0(double x) {
    x = std::abs(x);
    if (x > 1e4)
        throw std::invalid_argument("bessel_j0: |x| beyond the documented accuracy envelope");
    // trapezoid on the pi-periodic analytic integrand converges geometrically
    // once the oscillation is resolved; 1.5 points per unit argument suffices
    const int m = static_cast<int>(std::ceil(8.0 + 1.5 * x));
    const double h = kPi / m;
    double sum = 0.5 * (std::cos(0.0) + std::cos(x * std::sin(kPi)));
    for (int i = 1; i < m; ++i)
        sum += std::cos(x * std::sin(i * h));
    return sum * h / kPi;
}

DiscretizedKernel build_kernel(const std::string& builtin, const QuadratureGrid& grid_x,
                               const QuadratureGrid& grid_y) {
    DiscretizedKernel K;
    K.grid_x = grid_x;
    K.grid_y = grid_y;
    K.values.resize(grid_x.size(), grid_y.size());
    if (builtin == "cossin") {
        for (Eigen::Index i = 0; i < grid_x.size(); ++i) {
            const double x = grid_x.nodes[i];
            for (Eigen::Index j = 0; j < grid_y.size(); ++j) {
                const double y = grid_y.nodes[j];
                K.values(i, j) = std::cos(10.0 * (x * x + y)) * std::sin(10.0 * (x + y * y));
            }
        }
    } else if (builtin == "bessel") {
        for (Eigen::Index i = 0; i < grid_x.size(); ++i) {
            const double x = grid_x.nodes[i];
            for (Eigen::Index j = 0; j < grid_y.size(); ++j) {
                const double y = grid_y.nodes[j];
                K.values(i, j) = bessel_j0(100.0 * (x * y + y * y));
            }
        }
    } else {
        throw std::invalid_argument("build_kernel: unknown builtin '" + builtin + "'");
    }
    K.provenance = "builtin:" + builtin;
    return K;
}

DiscretizedKernel read_tabulated_kernel(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("read_tabulated_kernel: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("read_tabulated_kernel: empty file");
    const Eigen::VectorXd nx = parse_node_line(line, "# gridx:");
    if (!std::getline(in, line))
        throw std::invalid_argument("read_tabulated_kernel: missing gridy header");
    const Eigen::VectorXd ny = parse_node_line(line, "# gridy:");
    if (!std::getline(in, line))
        throw std::invalid_argument("read_tabulated_kernel: missing family header");
    const auto pos = line.find("# family:");
    if (pos == std::string::npos)
        throw std::invalid_argument("read_tabulated_kernel: missing family header");
    std::string fam = line.substr(pos + 9);
    fam.erase(0, fam.find_first_not_of(" \t"));
    fam.erase(fam.find_last_not_of(" \t\r") + 1);
    GridFamily family;
    if (fam == "chebcc")
        family = GridFamily::ChebyshevCC;
    else if (fam == "trapezoid")
        family = GridFamily::UniformTrapezoid;
    else
        throw std::invalid_argument("read_tabulated_kernel: unknown family '" + fam + "'");

    DiscretizedKernel K;
    K.grid_x = grid_from_nodes(nx, family);
    K.grid_y = grid_from_nodes(ny, family);
    K.values.resize(nx.size(), ny.size());
    for (Eigen::Index i = 0; i < nx.size(); ++i) {
        if (!std::getline(in, line))
            throw std::invalid_argument("read_tabulated_kernel: truncated data block");
        std::stringstream ss(line);
        std::string tok;
        for (Eigen::Index j = 0; j < ny.size(); ++j) {
            if (!std::getline(ss, tok, ','))
                throw std::invalid_argument("read_tabulated_kernel: short row");
            K.values(i, j) = std::stod(tok);
        }
    }
    if (!K.values.allFinite())
        throw std::invalid_argument("read_tabulated_kernel: non-finite kernel entry");
    K.provenance = "tabulated:" + path;
    return K;
}

void write_tabulated_kernel(const std::string& path, const QuadratureGrid& grid_x,
                            const QuadratureGrid& grid_y, const Eigen::MatrixXd& values) {
    if (values.rows() != grid_x.size() || values.cols() != grid_y.size())
        throw std::invalid_argument("write_tabulated_kernel: size mismatch");
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_tabulated_kernel: cannot open '" + path + "'");
    char buf[32];
    auto emit = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    auto emit_nodes = [&](const char* tag, const Eigen::VectorXd& nodes) {
        out << tag;
        for (Eigen::Index i = 0; i < nodes.size(); ++i) {
            if (i) out << ',';
            emit(nodes[i]);
        }
        out << '\n';
    };
    emit_nodes("# gridx: ", grid_x.nodes);
    emit_nodes("# gridy: ", grid_y.nodes);
    out << "# family: "
        << (grid_x.family == GridFamily::ChebyshevCC ? "chebcc" : "trapezoid") << '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            if (j) out << ',';
            emit(values(i, j));
        }
        out << '\n';
    }
}

Eigen::MatrixXd apply_operator(const DiscretizedKernel& K, const Eigen::MatrixXd& F) {
    check_grid_pair(K);
    if (F.rows() != K.grid_y.size())
        throw std::invalid_argument("apply_operator: input length mismatch");
    return K.values * (K.grid_y.weights.asDiagonal() * F);
}

Eigen::VectorXd apply_operator(const DiscretizedKernel& K, const Eigen::VectorXd& f) {
    return apply_operator(K, Eigen::MatrixXd(f)).col(0);
}

Eigen::MatrixXd apply_adjoint(const DiscretizedKernel& K, const Eigen::MatrixXd& Q) {
    check_grid_pair(K);
    if (Q.rows() != K.grid_x.size())
        throw std::invalid_argument("apply_adjoint: input length mismatch");
    return K.values.transpose() * (K.grid_x.weights.asDiagonal() * Q);
}

Eigen::VectorXd apply_adjoint(const DiscretizedKernel& K, const Eigen::VectorXd& q) {
    return apply_adjoint(K, Eigen::MatrixXd(q)).col(0);
}

Eigen::MatrixXd weighted_qr(const Eigen::MatrixXd& Y, const Eigen::VectorXd& weights) {
    if (Y.rows() != weights.size())
        throw std::invalid_argument("weighted_qr: weight length mismatch");
    // orthonormality under <f,g> = sum w f g is plain orthonormality of
    // W^{1/2} Y, so factor that and map back
    const Eigen::VectorXd sw = weights.cwiseSqrt();
    const Eigen::MatrixXd B = sw.asDiagonal() * Y;
    const double scale = B.norm();
    if (scale == 0.0)
        return Eigen::MatrixXd(Y.rows(), 0);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
    const Eigen::Index kmax = std::min(B.rows(), B.cols());
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < kmax; ++i) {
        if (std::abs(qr.matrixR()(i, i)) > 1e-12 * scale)
            ++rank;
        else
            break;
    }
    if (rank == 0)
        return Eigen::MatrixXd(Y.rows(), 0);
    Eigen::MatrixXd Qb = qr.householderQ() * Eigen::MatrixXd::Identity(B.rows(), rank);
    return sw.cwiseInverse().asDiagonal() * Qb;
}

LearnedKernel hs_randomized_svd(const DiscretizedKernel& K, const CovarianceSpec& cov,
                                Eigen::Index k, RandomSource rng) {
    const double tol = 1e-12 * (K.grid_y.b - K.grid_y.a);
    if (cov.form() != CovarianceSpec::Form::ExplicitMatrix &&
        (cov.domain_a() > K.grid_y.a + tol || cov.domain_b() < K.grid_y.b - tol))
        throw std::invalid_argument("hs_randomized_svd: covariance domain does not cover grid_y");
    const Eigen::MatrixXd Kcov = discretize_covariance(cov, K.grid_y);
    return hs_randomized_svd(K, factor_covariance(Kcov), k, rng);
}

LearnedKernel hs_randomized_svd(const DiscretizedKernel& K, const FactoredCovariance& fac,
                                Eigen::Index k, RandomSource rng) {
    check_grid_pair(K);
    if (fac.dim != K.grid_y.size())
        throw std::invalid_argument("hs_randomized_svd: covariance/grid size mismatch");
    if (k < 1)
        throw std::invalid_argument("hs_randomized_svd: need k >= 1");

    const Eigen::MatrixXd omega = draw_mvn_matrix(fac, rng, k);
    const Eigen::MatrixXd Y = apply_operator(K, omega);
    LearnedKernel L;
    L.grid_x = K.grid_x;
    L.grid_y = K.grid_y;
    L.Q = weighted_qr(Y, K.grid_x.weights);
    L.B = apply_adjoint(K, L.Q).transpose(); // row i = F_t q_i
    L.rank = L.Q.cols();
    return L;
}

L2Error l2_error(const DiscretizedKernel& K, const LearnedKernel& L) {
    check_grid_pair(K);
    if (L.grid_x.size() != K.grid_x.size() || L.grid_y.size() != K.grid_y.size() ||
        (L.grid_x.nodes - K.grid_x.nodes).cwiseAbs().maxCoeff() > 1e-12 ||
        (L.grid_y.nodes - K.grid_y.nodes).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("l2_error: grids do not match");
    const Eigen::VectorXd swx = K.grid_x.weights.cwiseSqrt();
    const Eigen::VectorXd swy = K.grid_y.weights.cwiseSqrt();
    // weighted residual assembled factor-wise to avoid the m x n dense diff
    Eigen::MatrixXd R = swx.asDiagonal() * K.values * swy.asDiagonal();
    const double den = R.norm();
    if (L.rank > 0)
        R -= (swx.asDiagonal() * L.Q) * (L.B * swy.asDiagonal());
    L2Error e;
    e.absolute = R.norm();
    e.relative = den > 0.0 ? e.absolute / den : 0.0;
    return e;
}

double l2_norm(const DiscretizedKernel& K) {
    check_grid_pair(K);
    const Eigen::VectorXd swx = K.grid_x.weights.cwiseSqrt();
    const Eigen::VectorXd swy = K.grid_y.weights.cwiseSqrt();
    return (swx.asDiagonal() * K.values * swy.asDiagonal()).norm();
}

Eigen::VectorXd weighted_singular_values(const DiscretizedKernel& K) {
    check_grid_pair(K);
    const Eigen::VectorXd swx = K.grid_x.weights.cwiseSqrt();
    const Eigen::VectorXd swy = K.grid_y.weights.cwiseSqrt();
    const Eigen::MatrixXd A = swx.asDiagonal() * K.values * swy.asDiagonal();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
    return svd.singularValues();
}

namespace {

Eigen::Index count_above(const Eigen::VectorXd& sv, double relative_tol) {
    if (sv.size() == 0 || !(sv[0] > 0.0))
        return 0;
    const double thr = relative_tol * sv[0];
    Eigen::Index c = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > thr) ++c;
    return c;
}

} // namespace

Eigen::Index kernel_numerical_rank(const DiscretizedKernel& K, double relative_tol) {
    return count_above(weighted_singular_values(K), relative_tol);
}

Eigen::Index learned_kernel_numerical_rank(const LearnedKernel& L, double relative_tol) {
    if (L.rank == 0)
        return 0;
    const Eigen::VectorXd swx = L.grid_x.weights.cwiseSqrt();
    const Eigen::VectorXd swy = L.grid_y.weights.cwiseSqrt();
    const Eigen::MatrixXd A = (swx.asDiagonal() * L.Q) * (L.B * swy.asDiagonal());
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
    return count_above(svd.singularValues(), relative_tol);
}

} // namespace gsketch
