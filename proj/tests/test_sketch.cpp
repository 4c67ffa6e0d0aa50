#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "gsketch/sampling.hpp"
#include "gsketch/sketch.hpp"

using namespace gsketch;

namespace {

Eigen::MatrixXd random_orthogonal(Eigen::Index n, RandomSource rng) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(standard_normal_matrix(n, n, rng));
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

Eigen::MatrixXd with_singular_values(const Eigen::VectorXd& sig, RandomSource rng) {
    const Eigen::Index n = sig.size();
    return random_orthogonal(n, rng.child(0)) * sig.asDiagonal() *
           random_orthogonal(n, rng.child(1)).transpose();
}

} // namespace

TEST_CASE("range finder basics") {
    const Eigen::MatrixXd I5 = Eigen::MatrixXd::Identity(5, 5);
    Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(5, 1);
    e1(0, 0) = 1.0;
    const Eigen::MatrixXd Q = range_finder(I5, e1);
    REQUIRE(Q.cols() == 1);
    CHECK(std::abs(Q.col(0).dot(e1.col(0))) == doctest::Approx(1.0).epsilon(1e-12));

    // rank-1 target: single column spanning u
    const Eigen::VectorXd u = standard_normal_matrix(10, 1, {2, 0});
    const Eigen::VectorXd v = standard_normal_matrix(8, 1, {2, 1});
    const Eigen::MatrixXd A = u * v.transpose();
    const Eigen::MatrixXd omega = standard_normal_matrix(8, 3, {2, 2});
    const Eigen::MatrixXd Q1 = range_finder(A, omega);
    REQUIRE(Q1.cols() == 1);
    CHECK(std::abs(Q1.col(0).dot(u.normalized())) == doctest::Approx(1.0).epsilon(1e-10));

    // zero sketch is an explicit empty range
    const Eigen::MatrixXd Qz =
        range_finder(Eigen::MatrixXd::Zero(6, 6), standard_normal_matrix(6, 2, {3, 0}));
    CHECK(Qz.cols() == 0);

    const Eigen::MatrixXd B = standard_normal_matrix(50, 40, {4, 0});
    const Eigen::MatrixXd Qb = range_finder(B, standard_normal_matrix(40, 20, {4, 1}));
    REQUIRE(Qb.cols() == 20);
    CHECK((Qb.transpose() * Qb - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff() <=
          1e-10);
}

TEST_CASE("projection error") {
    Eigen::VectorXd sig(3);
    sig << 3.0, 2.0, 1.0;
    const Eigen::MatrixXd A = sig.asDiagonal();
    Eigen::MatrixXd Q12 = Eigen::MatrixXd::Identity(3, 2);
    CHECK(project_error(A, Q12) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(project_error(A, Eigen::MatrixXd(3, 0)) ==
          doctest::Approx(std::sqrt(14.0)).epsilon(1e-12));

    const Eigen::MatrixXd R = standard_normal_matrix(12, 3, {5, 0});
    const Eigen::MatrixXd A3 = R * standard_normal_matrix(3, 9, {5, 1});
    const Eigen::MatrixXd Q = range_finder(A3, standard_normal_matrix(9, 5, {5, 2}));
    CHECK(project_error(A3, Q) <= 1e-10 * A3.norm());
}

TEST_CASE("singular value tails") {
    Eigen::VectorXd sv(3);
    sv << 3.0, 2.0, 1.0;
    CHECK(svd_tail(sv, 3) == 0.0);
    CHECK(svd_tail(sv, 1) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
    CHECK(svd_tail(sv, 0) == doctest::Approx(std::sqrt(14.0)).epsilon(1e-14));
    CHECK_THROWS_AS(svd_tail(sv, 4), std::invalid_argument);
}

TEST_CASE("covariance quality factor gamma") {
    const Eigen::MatrixXd V = random_orthogonal(8, {6, 0});
    CHECK(gamma_k(Eigen::MatrixXd::Identity(8, 8), V.leftCols(3)) ==
          doctest::Approx(1.0).epsilon(1e-12));

    // diagonal covariance with coordinate-aligned V1 has a closed form
    Eigen::VectorXd lam(6);
    lam << 1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125;
    const Eigen::MatrixXd K = lam.asDiagonal();
    const int k = 3;
    const Eigen::MatrixXd V1 = Eigen::MatrixXd::Identity(6, k);
    double tr_inv = 0.0;
    for (int j = 0; j < k; ++j) tr_inv += 1.0 / lam[j];
    CHECK(gamma_k(K, V1) == doctest::Approx(k / (lam[0] * tr_inv)).epsilon(1e-12));

    // blind covariance: energy only outside span(V1)
    Eigen::VectorXd w = Eigen::VectorXd::Zero(6);
    w[5] = 1.0;
    const Eigen::MatrixXd blind = w * w.transpose();
    CHECK_THROWS_AS(gamma_k(blind, V1), std::runtime_error);

    // always below one, and above the eigenvalue-ratio lower bound
    for (int t = 0; t < 20; ++t) {
        const RandomSource r{60, static_cast<std::uint64_t>(t)};
        const Eigen::MatrixXd G = standard_normal_matrix(12, 12, r);
        const Eigen::MatrixXd Kr = G * G.transpose() / 12.0;
        const Eigen::MatrixXd V1r = random_orthogonal(12, r.child(9)).leftCols(4);
        const double g = gamma_k(Kr, V1r);
        CHECK(g <= 1.0 + 1e-12);
        CHECK(g > 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Kr, Eigen::EigenvaluesOnly);
        const Eigen::VectorXd lams = es.eigenvalues().reverse();
        CHECK(1.0 / g <= inverse_gamma_upper_bound(lams, 4) * (1.0 + 1e-12));
    }
}

TEST_CASE("covariance quality factor beta") {
    const Eigen::Index n = 9;
    const int k = 3;
    const Eigen::MatrixXd V = random_orthogonal(n, {61, 0});
    const Eigen::MatrixXd V1 = V.leftCols(k);
    const Eigen::MatrixXd V2 = V.rightCols(n - k);
    Eigen::VectorXd sigma2(n - k);
    for (Eigen::Index j = 0; j < n - k; ++j)
        sigma2[j] = std::pow(0.5, static_cast<double>(j + 1));

    CHECK(beta_k(Eigen::MatrixXd::Identity(n, n), V2, sigma2) ==
          doctest::Approx(1.0).epsilon(1e-12));

    // prior equal to the leading right singular subspace kills the tail term
    const Eigen::MatrixXd Klead = V1 * V1.transpose();
    CHECK(beta_k(Klead, V2, sigma2) <= 1e-12);

    bool flag = false;
    CHECK(beta_k(Eigen::MatrixXd::Identity(n, n), V2, Eigen::VectorXd::Zero(n - k), &flag) ==
          0.0);
    CHECK(flag);

    // dominated by the eigenvalue-weighted upper bound
    for (int t = 0; t < 30; ++t) {
        const RandomSource r{62, static_cast<std::uint64_t>(t)};
        const Eigen::MatrixXd G = standard_normal_matrix(30, 30, r);
        const Eigen::MatrixXd Kr = G * G.transpose() / 30.0;
        const Eigen::MatrixXd Vr = random_orthogonal(30, r.child(5));
        Eigen::VectorXd s(30);
        for (Eigen::Index j = 0; j < 30; ++j) s[j] = std::pow(0.8, static_cast<double>(j));
        const int kk = 6;
        const double b = beta_k(Kr, Vr.rightCols(30 - kk), s.tail(30 - kk));
        CHECK(b <= 1.0 + 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Kr, Eigen::EigenvaluesOnly);
        CHECK(b <= beta_k_upper_bound(es.eigenvalues().reverse(), s, kk) + 1e-12);
    }
}

TEST_CASE("bound right-hand side") {
    SketchConfig cfg{10, 5, 1.0, 1.0};
    QualityFactors qf;
    qf.gamma_k = 1.0;
    qf.beta_k = 1.0;
    CHECK(bound_rhs(cfg, qf, 1.0, BoundMode::Generalized) ==
          doctest::Approx(1.0 + std::sqrt(75.0)).epsilon(1e-14));

    qf.beta_k = 0.0;
    CHECK(bound_rhs(cfg, qf, 0.37, BoundMode::Generalized) == 0.37);

    // nondecreasing in the beta/gamma ratio, t, and u
    qf.beta_k = 0.5;
    const double base = bound_rhs(cfg, qf, 1.0, BoundMode::Generalized);
    qf.beta_k = 0.9;
    CHECK(bound_rhs(cfg, qf, 1.0, BoundMode::Generalized) >= base);
    qf.beta_k = 0.5;
    cfg.t = 2.0;
    CHECK(bound_rhs(cfg, qf, 1.0, BoundMode::Generalized) >= base);
    cfg.t = 1.0;
    cfg.u = 3.0;
    CHECK(bound_rhs(cfg, qf, 1.0, BoundMode::Generalized) >= base);

    cfg.u = 1.0;
    CHECK(bound_rhs(cfg, qf, 1.0, BoundMode::StandardHMT, 0.25) ==
          doctest::Approx((1.0 + std::sqrt(5.0)) + (std::sqrt(15.0) / 6.0) * 0.25)
              .epsilon(1e-14));
    CHECK_THROWS_AS(bound_rhs(cfg, qf, 1.0, BoundMode::StandardHMT), std::invalid_argument);
    cfg.p = 3;
    CHECK_THROWS_AS(bound_rhs(cfg, qf, 1.0, BoundMode::Generalized), std::invalid_argument);
}

TEST_CASE("failure probability") {
    const SketchConfig cfg{10, 5, 4.0, 3.0};
    const double fp = failure_probability(cfg, BoundMode::Generalized);
    CHECK(fp <= 0.001);
    CHECK(fp >= std::pow(4.0, -5.0)); // the t-term alone

    SketchConfig u1{10, 5, 4.0, 1.0};
    CHECK(failure_probability(u1, BoundMode::Generalized) ==
          doctest::Approx(std::pow(4.0, -5.0) + 1.0).epsilon(1e-14));

    SketchConfig big_t{10, 5, 1e8, 3.0};
    CHECK(failure_probability(big_t, BoundMode::Generalized) ==
          doctest::Approx(std::pow(3.0 * std::exp(-4.0), 15.0)).epsilon(1e-10));

    CHECK(failure_probability(cfg, BoundMode::StandardHMT) ==
          doctest::Approx(2.0 * std::pow(4.0, -5.0) + std::exp(-9.0)).epsilon(1e-14));
}

TEST_CASE("monte-carlo expectation identity") {
    const Eigen::Index n = 12;
    const int k = 4;
    const Eigen::MatrixXd V2 = random_orthogonal(n, {63, 0}).rightCols(n - k);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n - k);

    const auto zero = mc_expectation_identity(ones, V2, Eigen::MatrixXd::Identity(n, n),
                                              Eigen::MatrixXd::Zero(6, k), 50, {64, 0});
    CHECK(zero.empirical_mean == 0.0);
    CHECK(zero.analytic == 0.0);

    // identity everything: analytic = (n-k) * k
    const auto id = mc_expectation_identity(ones, V2, Eigen::MatrixXd::Identity(n, n),
                                            Eigen::MatrixXd::Identity(k, k), 2000, {65, 0});
    CHECK(id.analytic == doctest::Approx(static_cast<double>((n - k) * k)).epsilon(1e-12));

    // random instance at Monte-Carlo accuracy
    const Eigen::MatrixXd G = standard_normal_matrix(20, 20, {66, 0});
    const Eigen::MatrixXd K = G * G.transpose() / 20.0;
    const Eigen::MatrixXd W2 = random_orthogonal(20, {66, 1}).rightCols(15);
    Eigen::VectorXd s(15);
    for (Eigen::Index j = 0; j < 15; ++j) s[j] = std::pow(0.6, static_cast<double>(j));
    const Eigen::MatrixXd T = standard_normal_matrix(9, 5, {66, 2});
    const auto res = mc_expectation_identity(s, W2, K, T, 10000, {66, 3});
    CHECK(std::abs(res.empirical_mean - res.analytic) <= 0.05 * res.analytic);

    // Monte-Carlo rate: quadrupling the trials roughly halves the standard error
    const auto se1 = mc_expectation_identity(s, W2, K, T, 2000, {66, 4});
    const auto se2 = mc_expectation_identity(s, W2, K, T, 8000, {66, 5});
    CHECK(se2.standard_error / se1.standard_error >= 0.35);
    CHECK(se2.standard_error / se1.standard_error <= 0.65);
}

TEST_CASE("monte-carlo tail bound") {
    const Eigen::Index n = 20;
    const int k = 5;
    const Eigen::MatrixXd V2 = random_orthogonal(n, {67, 0}).rightCols(n - k);
    Eigen::VectorXd s(n - k);
    for (Eigen::Index j = 0; j < n - k; ++j)
        s[j] = std::exp2(-static_cast<double>(k + j + 1));
    const Eigen::MatrixXd K = Eigen::MatrixXd::Identity(n, n);

    const auto s0 = mc_tail_bound(s, V2, K, 10, 0.0, 1000, {68, 0});
    CHECK(s0.bound == 1.0);
    CHECK(s0.exceed_rate <= 1.0);

    const auto s3 = mc_tail_bound(s, V2, K, 10, 3.0, 10000, {68, 1});
    CHECK(s3.bound == doctest::Approx(std::pow(4.0, 5.0) * std::exp(-15.0)).epsilon(1e-12));
    CHECK(s3.exceed_rate <= 1e-3);

    const auto s1 = mc_tail_bound(s, V2, K, 10, 1.0, 1000, {68, 2});
    const auto s2 = mc_tail_bound(s, V2, K, 10, 2.0, 1000, {68, 3});
    CHECK(s1.bound > s2.bound);
    CHECK(s2.bound > s3.bound);

    CHECK_THROWS_AS(mc_tail_bound(s, V2, K, 10, -0.5, 100, {68, 4}), std::invalid_argument);
}

TEST_CASE("generalized sketch on exact low rank") {
    const Eigen::MatrixXd L = standard_normal_matrix(10, 4, {70, 0});
    const Eigen::MatrixXd R = standard_normal_matrix(4, 10, {70, 1});
    const Eigen::MatrixXd A = L * R;
    const SketchResult r = generalized_rsvd(A, Eigen::MatrixXd::Identity(10, 10),
                                            SketchConfig{3, 4, 1.0, 1.0}, {70, 2});
    CHECK(r.error_fro <= 1e-10 * A.norm());
    CHECK(r.has_diagnostics);
    CHECK(r.factors.Q.cols() <= 7);
}

TEST_CASE("generalized sketch respects the error bound empirically") {
    Eigen::VectorXd sig(10);
    for (Eigen::Index j = 0; j < 10; ++j) sig[j] = std::pow(10.0, -static_cast<double>(j));
    const Eigen::MatrixXd A = with_singular_values(sig, {71, 0});
    const Eigen::MatrixXd K = Eigen::MatrixXd::Identity(10, 10);
    const SketchConfig cfg{5, 4, 1.0, 1.0};

    int ok = 0;
    SketchResult last;
    for (int t = 0; t < 1000; ++t) {
        last = generalized_rsvd(A, K, cfg, RandomSource{72, 0}.child(t));
        if (last.error_fro <= last.bound_rhs) ++ok;
    }
    CHECK(ok >= 990);
    CHECK(last.gamma_k == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(last.beta_k == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("subspace-informed prior nearly achieves the best error") {
    Eigen::VectorXd sig(20);
    for (Eigen::Index j = 0; j < 20; ++j) sig[j] = std::exp2(-static_cast<double>(j));
    const Eigen::MatrixXd U = random_orthogonal(20, {73, 0});
    const Eigen::MatrixXd V = random_orthogonal(20, {73, 1});
    const Eigen::MatrixXd A = U * sig.asDiagonal() * V.transpose();
    const int k = 5;
    const Eigen::MatrixXd V1 = V.leftCols(k);
    const Eigen::MatrixXd K =
        V1 * V1.transpose() + 1e-8 * Eigen::MatrixXd::Identity(20, 20);

    const SketchResult r = generalized_rsvd(A, K, SketchConfig{k, 5, 1.0, 1.0}, {73, 2});
    CHECK(r.error_fro <= 10.0 * r.tail);
    CHECK(r.beta_k <= 2e-8);
}

TEST_CASE("sketch diagnostics invariants") {
    Eigen::VectorXd sig(20);
    for (Eigen::Index j = 0; j < 20; ++j) sig[j] = std::pow(0.6, static_cast<double>(j));
    const Eigen::MatrixXd A = with_singular_values(sig, {74, 0});

    // nested sketches: projection error is monotone in the sketch width
    const Eigen::MatrixXd omega = standard_normal_matrix(20, 12, {74, 1});
    double prev = A.norm();
    for (Eigen::Index j = 2; j <= 12; j += 2) {
        const double e = project_error(A, range_finder(A, omega.leftCols(j)));
        CHECK(e <= prev + 1e-12);
        // never below the best error at the same width
        CHECK(e >= svd_tail(sig, j) - 1e-10 * A.norm());
        prev = e;
    }
}

TEST_CASE("sketch result serialization and input validation") {
    const Eigen::MatrixXd A = standard_normal_matrix(8, 8, {75, 0});
    const SketchResult r = generalized_rsvd(A, Eigen::MatrixXd::Identity(8, 8),
                                            SketchConfig{2, 4, 1.0, 1.0}, {76, 0});
    const std::string js = sketch_result_to_json(r);
    CHECK(js.find("\"k\":2") != std::string::npos);
    CHECK(js.find("\"p\":4") != std::string::npos);
    CHECK(js.find("\"seed\":76") != std::string::npos);
    CHECK(js.find("error_rel") != std::string::npos);

    CHECK_THROWS_AS(
        generalized_rsvd(A, Eigen::MatrixXd::Identity(7, 7), SketchConfig{2, 4, 1.0, 1.0},
                         RandomSource{1, 0}),
        std::invalid_argument);
    CHECK_THROWS_AS(
        generalized_rsvd(A, Eigen::MatrixXd::Identity(8, 8), SketchConfig{6, 4, 1.0, 1.0},
                         RandomSource{1, 0}),
        std::invalid_argument);
}

TEST_CASE("operator interface matches the dense path") {
    const Eigen::MatrixXd A = standard_normal_matrix(15, 12, {77, 0});
    const LinearOperator op = dense_operator(A);
    const Eigen::MatrixXd omega = standard_normal_matrix(12, 5, {77, 1});
    const Eigen::MatrixXd Qd = range_finder(A, omega);
    const Eigen::MatrixXd Qo = range_finder(op, omega);
    CHECK((Qd - Qo).cwiseAbs().maxCoeff() == 0.0);

    const SketchResult r =
        generalized_rsvd(op, Eigen::MatrixXd::Identity(12, 12), SketchConfig{3, 4, 1.0, 1.0},
                         {77, 2}, false);
    CHECK_FALSE(r.has_diagnostics);
    CHECK(r.factors.B.rows() == r.factors.Q.cols());
    const SketchResult rd =
        generalized_rsvd(op, Eigen::MatrixXd::Identity(12, 12), SketchConfig{3, 4, 1.0, 1.0},
                         {77, 2}, true);
    CHECK(rd.has_diagnostics);
    CHECK(rd.error_fro == doctest::Approx(project_error(A, rd.factors.Q)).epsilon(1e-12));
}
