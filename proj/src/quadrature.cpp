#include "gsketch/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gsketch {

namespace {

// Clenshaw-Curtis nodes/weights on [-1,1] for n points (degree N = n-1),
// classic cosine-sum form. O(n^2), fine for the grid sizes used here.
void clenshaw_curtis(Eigen::Index n, Eigen::VectorXd& x, Eigen::VectorXd& w) {
    const Eigen::Index N = n - 1;
    const double pi = std::numbers::pi;
    x.resize(n);
    w.resize(n);
    for (Eigen::Index j = 0; j <= N; ++j)
        x[j] = -std::cos(pi * static_cast<double>(j) / static_cast<double>(N));

    const bool even = (N % 2 == 0);
    const double endpoint = even ? 1.0 / (static_cast<double>(N) * N - 1.0)
                                 : 1.0 / (static_cast<double>(N) * N);
    w[0] = endpoint;
    w[N] = endpoint;
    for (Eigen::Index i = 1; i < N; ++i) {
        const double theta = pi * static_cast<double>(i) / static_cast<double>(N);
        double v = 1.0;
        const Eigen::Index kmax = even ? N / 2 - 1 : (N - 1) / 2;
        for (Eigen::Index k = 1; k <= kmax; ++k)
            v -= 2.0 * std::cos(2.0 * k * theta) / (4.0 * static_cast<double>(k) * k - 1.0);
        if (even)
            v -= std::cos(static_cast<double>(N) * theta) /
                 (static_cast<double>(N) * N - 1.0);
        w[i] = 2.0 * v / static_cast<double>(N);
    }
}

} // namespace

QuadratureGrid make_grid(GridFamily family, Eigen::Index n, double a, double b) {
    if (n < 2)
        throw std::invalid_argument("make_grid: need at least 2 nodes");
    if (!(b > a))
        throw std::invalid_argument("make_grid: degenerate interval");

    QuadratureGrid grid;
    grid.family = family;
    grid.a = a;
    grid.b = b;
    if (family == GridFamily::ChebyshevCC) {
        clenshaw_curtis(n, grid.nodes, grid.weights);
        grid.nodes = (a + (b - a) * 0.5 * (grid.nodes.array() + 1.0)).matrix();
        grid.weights *= 0.5 * (b - a);
        grid.nodes[0] = a;      // guard against rounding at the endpoints
        grid.nodes[n - 1] = b;
    } else {
        grid.nodes = Eigen::VectorXd::LinSpaced(n, a, b);
        const double h = (b - a) / static_cast<double>(n - 1);
        grid.weights = Eigen::VectorXd::Constant(n, h);
        grid.weights[0] = 0.5 * h;
        grid.weights[n - 1] = 0.5 * h;
    }
    return grid;
}

double weighted_dot(const QuadratureGrid& grid, const Eigen::VectorXd& f,
                    const Eigen::VectorXd& g) {
    if (f.size() != grid.size() || g.size() != grid.size())
        throw std::invalid_argument("weighted_dot: length mismatch with grid");
    return (grid.weights.array() * f.array() * g.array()).sum();
}

} // namespace gsketch
