#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gsketch {

/// Iterated base-2 logarithm: sum of the positive iterates log2(x), log2(log2(x)), ...
double log2_star(double x);

/// Normalization constant of the slowly decaying universal weight sequence,
/// sum_{i>=2} 2^{-log2*(i)}. Computed once (partial sum to 1e7 plus an
/// integral tail estimate) and cached.
double rissanen_constant();

/// Positive nonincreasing eigenvalue sequences for Mercer-form covariance
/// kernels. Rissanen: lambda_j = 2^{-log2*(j)}/c0; ScaledRissanen divides by
/// j on top; PowerLaw: lambda_j = j^{-nu} with nu > 1.
class EigenSequence {
  public:
    enum class Kind { Rissanen, ScaledRissanen, PowerLaw, Explicit };

    static EigenSequence rissanen(std::size_t n);
    static EigenSequence scaled_rissanen(std::size_t n);
    static EigenSequence power_law(double nu, std::size_t n);
    static EigenSequence explicit_values(std::vector<double> values);

    Kind kind() const { return kind_; }
    std::size_t truncation() const { return n_; }
    double nu() const { return nu_; }
    const std::vector<double>& values() const { return values_; }

    std::string kind_name() const;

  private:
    EigenSequence(Kind kind, std::size_t n, double nu, std::vector<double> values)
        : kind_(kind), n_(n), nu_(nu), values_(std::move(values)) {}

    Kind kind_;
    std::size_t n_;
    double nu_ = 0.0;
    std::vector<double> values_;
};

/// lambda_j for 1 <= j <= seq.truncation(). Throws std::out_of_range outside
/// that window.
double eigen_sequence_eval(const EigenSequence& seq, std::size_t j);

/// All of lambda_1..lambda_n as a vector.
std::vector<double> eigen_sequence_values(const EigenSequence& seq);

/// Heuristic check that sum_j j*lambda_j behaves like a convergent series:
/// compares the dyadic-block increments of the partial sums at n, n/2, n/4.
/// Returns false when the last block fails to shrink (the continuity
/// requirement for the boundary-vanishing kernel is then suspect).
bool jacobi_series_tail_ok(const EigenSequence& seq);

} // namespace gsketch
