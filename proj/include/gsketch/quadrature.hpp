#pragma once

#include <Eigen/Dense>

namespace gsketch {

enum class GridFamily { ChebyshevCC, UniformTrapezoid };

/// Nodes (strictly increasing) and positive weights realizing the discrete
/// L2 inner product <f,g> = sum_i w_i f_i g_i on [a, b]. Weights sum to b-a.
struct QuadratureGrid {
    GridFamily family = GridFamily::ChebyshevCC;
    double a = -1.0;
    double b = 1.0;
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;

    Eigen::Index size() const { return nodes.size(); }
};

/// Chebyshev points of the second kind with Clenshaw-Curtis weights, or
/// uniform nodes with trapezoid weights, mapped to [a, b]. n >= 2 points.
QuadratureGrid make_grid(GridFamily family, Eigen::Index n, double a, double b);

/// Discrete weighted inner product of two node vectors on the grid.
double weighted_dot(const QuadratureGrid& grid, const Eigen::VectorXd& f,
                    const Eigen::VectorXd& g);

inline double weighted_norm(const QuadratureGrid& grid, const Eigen::VectorXd& f) {
    return std::sqrt(weighted_dot(grid, f, f));
}

} // namespace gsketch
