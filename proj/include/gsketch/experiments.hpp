#pragma once

#include <cstdint>
#include <string>

namespace gsketch {

/// Resolved configuration for one CLI command. Flags override config-file
/// values; everything lands here before a command runs, and the resolved
/// state is embedded verbatim in the output header for reproducibility.
struct ExperimentConfig {
    std::string command;
    std::uint64_t seed = 0;
    int trials = 10;
    std::string out;
    int n = 0;          // 0 = command-specific default
    int k_max = 100;
    int p = 5;
    double ell = 0.01;
    double nu = 3.0;
    std::string kernel; // builtin name or tabulated-kernel path
    std::string cov;    // covariance selector; empty = command default

    std::string resolved_json() const;
};

/// Sketching error ratios (against the best rank-l error) for the inverse of
/// the discretized second-order operator with a sin(5 pi x) potential, with
/// identity and Green's-function covariances. Emits a CSV sweep over sample
/// counts.
void cmd_matrix_prior(const ExperimentConfig& cfg);

/// Relative learning error of a builtin or tabulated kernel as a function of
/// the sample count, for a list of covariances, with the best-error tail
/// column. Emits CSV.
void cmd_hs_convergence(const ExperimentConfig& cfg);

/// Kernel slices and GP draws for the boundary-vanishing Jacobi kernel with
/// the designed eigenvalue sequences. Emits CSV.
void cmd_gp_samples(const ExperimentConfig& cfg);

/// Monte-Carlo verification of the expectation identity, the tail bound, the
/// error-bound validity sweep and the quality-factor inequalities on small
/// random instances. Emits a JSON report; returns true when all checks pass.
bool cmd_bound_check(const ExperimentConfig& cfg);

/// One randomized low-rank sweep over a kernel; dumps the learned kernel in
/// the tabulated CSV format plus a JSON summary {rank, rel_error, k, seed}.
void cmd_kernel_learn(const ExperimentConfig& cfg);

} // namespace gsketch
