#include "gsketch/eigen_sequence.hpp"

#include <cmath>
#include <iostream>
#include <mutex>
#include <stdexcept>

namespace gsketch {

double log2_star(double x) {
    if (x <= 0.0)
        throw std::invalid_argument("log2_star: argument must be positive");
    double sum = 0.0;
    double t = std::log2(x);
    while (t > 0.0) {
        sum += t;
        t = std::log2(t);
    }
    return sum;
}

namespace {

constexpr double kLn2 = 0.6931471805599453;

// Integral of 2^{-log2*(x)} over [a, inf). Exact recursion: substituting
// x = 2^y gives T(a) = ln2 * T(log2 a); below a = 1 the integrand is 1 and
// the fixed point gives T(1) = ln2/(1 - ln2).
double weight_integral_tail(double a) {
    double factor = 1.0;
    while (a > 1.0) {
        factor *= kLn2;
        a = std::log2(a);
    }
    return factor * ((1.0 - a) + kLn2 / (1.0 - kLn2));
}

double compute_rissanen_constant() {
    constexpr std::size_t cutoff = 10'000'000;
    double partial = 0.0;
    for (std::size_t i = 2; i <= cutoff; ++i)
        partial += std::exp2(-log2_star(static_cast<double>(i)));
    const double tail = weight_integral_tail(static_cast<double>(cutoff) + 0.5);
    std::clog << "gsketch: rissanen normalization = " << partial << " (partial) + "
              << tail << " (tail estimate)\n";
    return partial + tail;
}

} // namespace

double rissanen_constant() {
    static const double c0 = compute_rissanen_constant();
    return c0;
}

EigenSequence EigenSequence::rissanen(std::size_t n) {
    if (n == 0)
        throw std::invalid_argument("EigenSequence: truncation must be positive");
    return EigenSequence(Kind::Rissanen, n, 0.0, {});
}

EigenSequence EigenSequence::scaled_rissanen(std::size_t n) {
    if (n == 0)
        throw std::invalid_argument("EigenSequence: truncation must be positive");
    return EigenSequence(Kind::ScaledRissanen, n, 0.0, {});
}

EigenSequence EigenSequence::power_law(double nu, std::size_t n) {
    if (n == 0)
        throw std::invalid_argument("EigenSequence: truncation must be positive");
    if (!(nu > 1.0))
        throw std::invalid_argument("EigenSequence: power law requires nu > 1");
    return EigenSequence(Kind::PowerLaw, n, nu, {});
}

EigenSequence EigenSequence::explicit_values(std::vector<double> values) {
    if (values.empty())
        throw std::invalid_argument("EigenSequence: empty value list");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0))
            throw std::invalid_argument("EigenSequence: weights must be positive");
        if (i > 0 && values[i] > values[i - 1])
            throw std::invalid_argument("EigenSequence: weights must be nonincreasing");
    }
    const std::size_t n = values.size();
    return EigenSequence(Kind::Explicit, n, 0.0, std::move(values));
}

std::string EigenSequence::kind_name() const {
    switch (kind_) {
        case Kind::Rissanen: return "rissanen";
        case Kind::ScaledRissanen: return "scaled_rissanen";
        case Kind::PowerLaw: return "power_law";
        case Kind::Explicit: return "explicit";
    }
    return "unknown";
}

double eigen_sequence_eval(const EigenSequence& seq, std::size_t j) {
    if (j < 1 || j > seq.truncation())
        throw std::out_of_range("eigen_sequence_eval: index outside 1..n");
    const double jd = static_cast<double>(j);
    switch (seq.kind()) {
        case EigenSequence::Kind::Rissanen:
            return std::exp2(-log2_star(jd)) / rissanen_constant();
        case EigenSequence::Kind::ScaledRissanen:
            return std::exp2(-log2_star(jd)) / rissanen_constant() / jd;
        case EigenSequence::Kind::PowerLaw:
            return std::pow(jd, -seq.nu());
        case EigenSequence::Kind::Explicit:
            return seq.values()[j - 1];
    }
    throw std::logic_error("eigen_sequence_eval: unreachable");
}

std::vector<double> eigen_sequence_values(const EigenSequence& seq) {
    std::vector<double> out(seq.truncation());
    for (std::size_t j = 1; j <= seq.truncation(); ++j)
        out[j - 1] = eigen_sequence_eval(seq, j);
    return out;
}

bool jacobi_series_tail_ok(const EigenSequence& seq) {
    const std::size_t n = seq.truncation();
    if (n < 16)
        return true; // too short to judge
    auto block = [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t j = lo + 1; j <= hi; ++j)
            s += static_cast<double>(j) * eigen_sequence_eval(seq, j);
        return s;
    };
    const double d_last = block(n / 2, n);
    const double d_prev = block(n / 4, n / 2);
    return d_last < 0.9 * d_prev;
}

} // namespace gsketch
