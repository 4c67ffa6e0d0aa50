#include "gsketch/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "gsketch/covariance.hpp"
#include "gsketch/hsop.hpp"
#include "gsketch/sampling.hpp"
#include "gsketch/sketch.hpp"

namespace gsketch {

namespace {

std::string fmt(double v) {
    if (!std::isfinite(v))
        throw std::runtime_error("experiment produced a non-finite value");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const ExperimentConfig& cfg) {
    std::ofstream out(cfg.out);
    if (!out)
        throw std::invalid_argument("cannot open output file '" + cfg.out + "'");
    out << "# config: " << cfg.resolved_json() << "\n";
    return out;
}

struct Stats {
    double mean = 0.0;
    double stddev = 0.0;
};

Stats mean_std(const std::vector<double>& v) {
    Stats s;
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double acc = 0.0;
        for (double x : v) acc += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(acc / static_cast<double>(v.size() - 1));
    }
    return s;
}

std::vector<Eigen::Index> log_spaced(Eigen::Index lo, Eigen::Index hi, int points) {
    std::vector<Eigen::Index> out;
    for (int i = 0; i < points; ++i) {
        const double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        const double v = std::exp(std::log(static_cast<double>(lo)) +
                                  f * (std::log(static_cast<double>(hi)) -
                                       std::log(static_cast<double>(lo))));
        const Eigen::Index r = static_cast<Eigen::Index>(std::llround(v));
        if (out.empty() || r > out.back())
            out.push_back(r);
    }
    return out;
}

// error-vs-best ratio with the degenerate full-rank rows pinned to 1
double error_ratio(double err, double tail, double scale) {
    if (tail > 1e-14 * scale)
        return err / tail;
    return err <= 1e-8 * scale ? 1.0 : err / (1e-14 * scale);
}

} // namespace

std::string ExperimentConfig::resolved_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["seed"] = seed;
    j["trials"] = trials;
    j["out"] = out;
    j["n"] = n;
    j["k_max"] = k_max;
    j["p"] = p;
    j["ell"] = ell;
    j["nu"] = nu;
    j["kernel"] = kernel;
    j["cov"] = cov;
    return j.dump();
}

void cmd_matrix_prior(const ExperimentConfig& cfg) {
    const Eigen::Index n = cfg.n > 0 ? cfg.n : 500;
    if (n < 50)
        throw std::invalid_argument("matrix-prior: n < 50 cannot resolve the potential");
    const int trials = std::max(1, cfg.trials);
    const RandomSource base{cfg.seed, 0};

    // A = inverse of the central-difference discretization of
    // u'' - 100 sin(5 pi x) u with Dirichlet conditions on [0,1]
    const double h = 1.0 / static_cast<double>(n + 1);
    Eigen::VectorXd xg(n);
    for (Eigen::Index i = 0; i < n; ++i)
        xg[i] = static_cast<double>(i + 1) * h;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        L(i, i) = -2.0 / (h * h) - 100.0 * std::sin(5.0 * std::numbers::pi * xg[i]);
        if (i + 1 < n) {
            L(i, i + 1) = 1.0 / (h * h);
            L(i + 1, i) = 1.0 / (h * h);
        }
    }
    const Eigen::MatrixXd A = L.partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
    const double a_norm = A.norm();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
    const Eigen::VectorXd& sv = svd.singularValues();

    QuadratureGrid grid;
    grid.family = GridFamily::UniformTrapezoid;
    grid.a = 0.0;
    grid.b = 1.0;
    grid.nodes = xg;
    grid.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    const Eigen::MatrixXd Kg =
        discretize_covariance(CovarianceSpec::laplace_green(static_cast<std::size_t>(n)), grid);
    const FactoredCovariance fac = factor_covariance(Kg);

    auto out = open_out(cfg);
    out << "samples,mean_ratio_identity,std_identity,mean_ratio_prior,std_prior\n";

    const auto sweep = log_spaced(4, n, 16);
    std::uint64_t stream = 0;
    for (Eigen::Index ell : sweep) {
        const double tail = svd_tail(sv, ell);
        std::vector<double> r_id, r_pr;
        for (int tr = 0; tr < trials; ++tr) {
            const Eigen::MatrixXd g =
                standard_normal_matrix(n, ell, base.child(stream++));
            r_id.push_back(error_ratio(project_error(A, range_finder(A, g)), tail, a_norm));
            const Eigen::MatrixXd omega = draw_mvn_matrix(fac, base.child(stream++), ell);
            r_pr.push_back(error_ratio(project_error(A, range_finder(A, omega)), tail, a_norm));
        }
        const Stats si = mean_std(r_id), sp = mean_std(r_pr);
        out << ell << ',' << fmt(si.mean) << ',' << fmt(si.stddev) << ',' << fmt(sp.mean)
            << ',' << fmt(sp.stddev) << '\n';
    }
}

namespace {

struct NamedCovariance {
    std::string name;
    CovarianceSpec spec;
};

std::vector<NamedCovariance> convergence_covariances(const ExperimentConfig& cfg) {
    std::vector<NamedCovariance> list;
    if (cfg.cov.empty() || cfg.cov == "all") {
        list.push_back({"sqexp0.01", CovarianceSpec::sqexp(0.01)});
        list.push_back({"sqexp0.1", CovarianceSpec::sqexp(0.1)});
        list.push_back({"sqexp1", CovarianceSpec::sqexp(1.0)});
        list.push_back({"jacobi_nu3",
                        CovarianceSpec::jacobi_mercer(2, EigenSequence::power_law(3.0, 500))});
    } else if (cfg.cov == "sqexp") {
        list.push_back({"sqexp", CovarianceSpec::sqexp(cfg.ell)});
    } else if (cfg.cov == "jacobi") {
        list.push_back({"jacobi",
                        CovarianceSpec::jacobi_mercer(2, EigenSequence::power_law(cfg.nu, 500))});
    } else {
        throw std::invalid_argument("unknown covariance '" + cfg.cov + "'");
    }
    return list;
}

DiscretizedKernel load_kernel(const ExperimentConfig& cfg) {
    const std::string name = cfg.kernel.empty() ? "bessel" : cfg.kernel;
    if (name == "cossin" || name == "bessel") {
        const Eigen::Index n = cfg.n > 0 ? cfg.n : (name == "cossin" ? 600 : 1000);
        const QuadratureGrid g = make_grid(GridFamily::ChebyshevCC, n, -1.0, 1.0);
        return build_kernel(name, g, g);
    }
    return read_tabulated_kernel(name);
}

} // namespace

void cmd_hs_convergence(const ExperimentConfig& cfg) {
    const DiscretizedKernel K = load_kernel(cfg);
    const auto covs = convergence_covariances(cfg);
    const int trials = std::max(1, cfg.trials);
    const RandomSource base{cfg.seed, 0};

    const Eigen::VectorXd wsv = weighted_singular_values(K);
    const double norm_w = l2_norm(K);

    std::vector<FactoredCovariance> facs;
    facs.reserve(covs.size());
    for (const auto& c : covs)
        facs.push_back(factor_covariance(discretize_covariance(c.spec, K.grid_y)));

    auto out = open_out(cfg);
    out << "k,tail_rel";
    for (const auto& c : covs)
        out << ",mean_" << c.name << ",std_" << c.name;
    out << '\n';

    std::vector<Eigen::Index> ks = log_spaced(1, cfg.k_max, 14);
    ks.insert(ks.begin(), 0);
    std::uint64_t stream = 0;
    for (Eigen::Index k : ks) {
        out << k << ',' << fmt(svd_tail(wsv, std::min(k, wsv.size())) / norm_w);
        for (std::size_t c = 0; c < covs.size(); ++c) {
            if (k == 0) {
                out << ',' << fmt(1.0) << ',' << fmt(0.0);
                continue;
            }
            std::vector<double> errs;
            for (int tr = 0; tr < trials; ++tr) {
                const LearnedKernel L =
                    hs_randomized_svd(K, facs[c], k, base.child(stream++));
                errs.push_back(l2_error(K, L).relative);
            }
            const Stats s = mean_std(errs);
            out << ',' << fmt(s.mean) << ',' << fmt(s.stddev);
        }
        out << '\n';
    }
}

void cmd_gp_samples(const ExperimentConfig& cfg) {
    const std::size_t terms = cfg.n > 0 ? static_cast<std::size_t>(cfg.n) : 500;
    const int count = std::max(1, cfg.trials);
    const RandomSource base{cfg.seed, 0};

    std::vector<std::pair<std::string, EigenSequence>> seqs;
    auto want = [&](const std::string& s) { return cfg.cov.empty() || cfg.cov == s; };
    if (want("pl4")) seqs.emplace_back("pl4", EigenSequence::power_law(4.0, terms));
    if (want("pl3")) seqs.emplace_back("pl3", EigenSequence::power_law(3.0, terms));
    if (want("scaled_rissanen"))
        seqs.emplace_back("scaled_rissanen", EigenSequence::scaled_rissanen(terms));
    if (seqs.empty())
        throw std::invalid_argument("gp-samples: invalid sequence '" + cfg.cov + "'");

    const QuadratureGrid grid = make_grid(GridFamily::UniformTrapezoid, 801, -1.0, 1.0);

    auto out = open_out(cfg);
    out << "seq,x,k_diag,k_xm05,k_x0,k_xp05";
    for (int d = 1; d <= count; ++d)
        out << ",draw_" << d;
    out << '\n';

    std::uint64_t stream = 0;
    for (const auto& [name, seq] : seqs) {
        const CovarianceSpec spec = CovarianceSpec::jacobi_mercer(2, seq);
        Eigen::MatrixXd draws(grid.size(), count);
        for (int d = 0; d < count; ++d)
            draws.col(d) = sample_gp_function(spec, grid, base.child(stream++));
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            const double x = grid.nodes[i];
            out << name << ',' << fmt(x) << ',' << fmt(jacobi_kernel_eval(2, seq, x, x)) << ','
                << fmt(jacobi_kernel_eval(2, seq, x, -0.5)) << ','
                << fmt(jacobi_kernel_eval(2, seq, x, 0.0)) << ','
                << fmt(jacobi_kernel_eval(2, seq, x, 0.5));
            for (int d = 0; d < count; ++d)
                out << ',' << fmt(draws(i, d));
            out << '\n';
        }
    }
}

bool cmd_bound_check(const ExperimentConfig& cfg) {
    const Eigen::Index n = cfg.n > 0 ? cfg.n : 30;
    const int k = 5;
    const int p = cfg.p;
    const Eigen::Index trials = std::max(1000, cfg.trials);
    const RandomSource base{cfg.seed, 0};

    nlohmann::ordered_json report;
    report["config"] = nlohmann::ordered_json::parse(cfg.resolved_json());
    auto checks = nlohmann::ordered_json::array();
    bool all_pass = true;
    auto add = [&](const std::string& name, double value, double bound, bool pass) {
        checks.push_back({{"name", name}, {"value", value}, {"bound", bound}, {"pass", pass}});
        all_pass = all_pass && pass;
    };

    // shared geometrically decaying instance
    Eigen::VectorXd sig(n);
    for (Eigen::Index j = 0; j < n; ++j)
        sig[j] = std::exp2(-static_cast<double>(j + 1));
    Eigen::HouseholderQR<Eigen::MatrixXd> qru(standard_normal_matrix(n, n, base.child(0)));
    Eigen::HouseholderQR<Eigen::MatrixXd> qrv(standard_normal_matrix(n, n, base.child(1)));
    const Eigen::MatrixXd U = qru.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd V = qrv.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd A = U * sig.asDiagonal() * V.transpose();
    const Eigen::MatrixXd V1 = V.leftCols(k);
    const Eigen::MatrixXd V2 = V.rightCols(n - k);
    const Eigen::VectorXd sigma2 = sig.tail(n - k);
    const double tail = svd_tail(sig, k);

    // expectation identity on a 20x20 instance
    {
        const Eigen::Index m = 20, kk = 5;
        Eigen::VectorXd s2(m - kk);
        for (Eigen::Index j = 0; j < m - kk; ++j)
            s2[j] = std::exp2(-static_cast<double>(kk + j + 1));
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(standard_normal_matrix(m, m, base.child(2)));
        const Eigen::MatrixXd W2 =
            (qr.householderQ() * Eigen::MatrixXd::Identity(m, m)).rightCols(m - kk);
        const Eigen::MatrixXd T = standard_normal_matrix(k + p, kk, base.child(3));
        const Eigen::MatrixXd Kc = Eigen::MatrixXd::Identity(m, m);
        const Eigen::Index tr = std::max<Eigen::Index>(trials, 10000);
        const auto res = mc_expectation_identity(s2, W2, Kc, T, tr, base.child(4));
        const double rel = std::abs(res.empirical_mean - res.analytic) / res.analytic;
        add("expectation_identity_rel_dev", rel, 0.05, rel <= 0.05);
    }

    // trailing-block tail bound, ell = 10
    for (double s : {1.0, 2.0, 3.0}) {
        const auto res = mc_tail_bound(sigma2, V2, Eigen::MatrixXd::Identity(n, n), 10, s,
                                       trials, base.child(5 + static_cast<std::uint64_t>(s)));
        const double se = std::sqrt(res.bound * (1.0 - std::min(res.bound, 1.0)) /
                                    static_cast<double>(trials));
        const double limit = res.bound + 3.0 * se;
        char name[32];
        std::snprintf(name, sizeof name, "tail_bound_s%g", s);
        add(name, res.exceed_rate, limit, res.exceed_rate <= limit);
    }

    // bound validity sweep at (t, u) = (4, 3)
    for (const bool powerlaw : {false, true}) {
        Eigen::MatrixXd K = Eigen::MatrixXd::Identity(n, n);
        if (powerlaw) {
            for (Eigen::Index j = 0; j < n; ++j)
                K(j, j) = std::pow(static_cast<double>(j + 1), -2.0);
        }
        const SketchConfig scfg{k, p, 4.0, 3.0};
        QualityFactors qf;
        qf.lambda1 = K(0, 0);
        qf.gamma_k = gamma_k(K, V1, qf.lambda1);
        qf.beta_k = beta_k(K, V2, sigma2);
        const double rhs = bound_rhs(scfg, qf, tail, BoundMode::Generalized);
        const FactoredCovariance fac = factor_covariance(K);
        Eigen::Index viol = 0;
        for (Eigen::Index tr = 0; tr < trials; ++tr) {
            const Eigen::MatrixXd omega =
                draw_mvn_matrix(fac, base.child(100 + (powerlaw ? trials : 0) + tr), k + p);
            if (project_error(A, range_finder(A, omega)) > rhs)
                ++viol;
        }
        const double frac = static_cast<double>(viol) / static_cast<double>(trials);
        const double limit = 0.001 + 3.0 * std::sqrt(0.001 / static_cast<double>(trials));
        add(powerlaw ? "bound_validity_powerlaw" : "bound_validity_identity", frac, limit,
            frac <= limit);
    }

    // identity covariance gives unit quality factors
    {
        const Eigen::MatrixXd K = Eigen::MatrixXd::Identity(n, n);
        const double g = gamma_k(K, V1, 1.0);
        const double b = beta_k(K, V2, sigma2);
        add("gamma_identity_dev", std::abs(g - 1.0), 1e-12, std::abs(g - 1.0) <= 1e-12);
        add("beta_identity_dev", std::abs(b - 1.0), 1e-12, std::abs(b - 1.0) <= 1e-12);
    }

    // quality-factor inequalities on random instances
    {
        double worst_gamma = 0.0, worst_beta = 0.0;
        for (int inst = 0; inst < 100; ++inst) {
            const RandomSource r = base.child(10000 + static_cast<std::uint64_t>(inst));
            auto eng = make_engine(r);
            const Eigen::Index m = 10 + static_cast<Eigen::Index>(eng() % 31);
            const Eigen::Index kk = 1 + static_cast<Eigen::Index>(eng() % 5);
            const Eigen::MatrixXd G = standard_normal_matrix(m, m, r.child(0));
            const Eigen::MatrixXd Kr = G * G.transpose() / static_cast<double>(m);
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(standard_normal_matrix(m, m, r.child(1)));
            const Eigen::MatrixXd Vr = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
            Eigen::VectorXd sr(m);
            for (Eigen::Index j = 0; j < m; ++j)
                sr[j] = std::pow(0.7, static_cast<double>(j));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Kr, Eigen::EigenvaluesOnly);
            const Eigen::VectorXd lam = es.eigenvalues().reverse();
            const double g = gamma_k(Kr, Vr.leftCols(kk), lam[0]);
            const double gbound = inverse_gamma_upper_bound(lam, kk);
            worst_gamma = std::max(worst_gamma, 1.0 / g - gbound);
            const double b = beta_k(Kr, Vr.rightCols(m - kk), sr.tail(m - kk));
            const double bbound = beta_k_upper_bound(lam, sr, kk);
            worst_beta = std::max(worst_beta, b - bbound);
        }
        add("gamma_lower_bound_violation", worst_gamma, 1e-12, worst_gamma <= 1e-12);
        add("beta_upper_bound_violation", worst_beta, 1e-12, worst_beta <= 1e-12);
    }

    report["checks"] = checks;
    report["all_pass"] = all_pass;

    std::ofstream out(cfg.out);
    if (!out)
        throw std::invalid_argument("cannot open output file '" + cfg.out + "'");
    out << report.dump(2) << '\n';
    return all_pass;
}

void cmd_kernel_learn(const ExperimentConfig& cfg) {
    ExperimentConfig kcfg = cfg;
    if (kcfg.kernel.empty()) kcfg.kernel = "cossin";
    const DiscretizedKernel K = load_kernel(kcfg);

    CovarianceSpec spec = CovarianceSpec::sqexp(cfg.ell);
    if (cfg.cov == "jacobi")
        spec = CovarianceSpec::jacobi_mercer(2, EigenSequence::power_law(cfg.nu, 500));
    else if (!cfg.cov.empty() && cfg.cov != "sqexp")
        throw std::invalid_argument("kernel-learn: unknown covariance '" + cfg.cov + "'");

    const Eigen::Index k = cfg.k_max;
    const LearnedKernel L = hs_randomized_svd(K, spec, k, RandomSource{cfg.seed, 0});
    const L2Error err = l2_error(K, L);
    const Eigen::Index rank = learned_kernel_numerical_rank(L, std::exp2(-52));

    const Eigen::MatrixXd values = L.Q * L.B;
    write_tabulated_kernel(cfg.out, L.grid_x, L.grid_y, values);

    nlohmann::ordered_json j;
    j["rank"] = rank;
    j["rel_error"] = err.relative;
    j["k"] = k;
    j["seed"] = cfg.seed;
    std::ofstream summary(cfg.out + ".json");
    if (!summary)
        throw std::invalid_argument("cannot open output file '" + cfg.out + ".json'");
    summary << j.dump(2) << '\n';
    std::cout << "kernel-learn: rank=" << rank << " rel_error=" << err.relative << '\n';
}

} // namespace gsketch
