#include "doctest.h"

#include "gfmr/gfmr.hpp"
#include "oracles.hpp"

#include <random>

using namespace gfmr;

namespace {

Matrix gaussian(Index r, Index c, unsigned seed, double sd = 1.0) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> z(0.0, sd);
    Matrix A(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) A(i, j) = z(rng);
    return A;
}

Dataset tiny(Index n, Index p, Index M, unsigned seed) {
    Matrix X = gaussian(n, p, seed);
    X.col(0).setOnes();
    Matrix G = Matrix::Zero(p, M);
    for (Index j = M / 2; j < M; ++j) G.col(j).setConstant(1.5);
    Dataset d{X, X * G + gaussian(n, M, seed + 1, 0.5), TensorShape({M})};
    return d;
}

SolverConfig tight(double lam) {
    SolverConfig c;
    c.lam = lam;
    c.tol = 1e-10;
    c.max_iter = 20000;
    c.gfl.inner_tol = 1e-12;
    c.gfl.inner_max_iter = 100000;
    return c;
}

}  // namespace

TEST_CASE("theta update arithmetic") {
    AdmmState s;
    s.theta = Vector::Zero(1);
    s.eta = Vector::Constant(1, 1.0);
    s.mu = Vector::Constant(1, 2.0);
    s.U = Vector::Zero(1);
    s.V = Vector::Zero(1);
    SolverConfig c;
    c.admm_penalty = 1.0;
    CHECK(theta_update(s, Vector::Constant(1, 3.0), c)[0] == doctest::Approx(2.0));

    AdmmState zero{Vector::Zero(3), Vector::Zero(3), Vector::Zero(3), Vector::Zero(3), Vector::Zero(3)};
    CHECK(theta_update(zero, Vector::Zero(3), c).norm() == 0.0);

    AdmmState same = zero;
    same.eta = same.mu = Vector::LinSpaced(3, 1, 3);
    c.admm_penalty = 1e6;
    const Vector t = theta_update(same, Vector::Constant(3, 7.0), c);
    CHECK((t - same.eta).norm() / same.eta.norm() < 1e-5);
}

TEST_CASE("eta update projects theta + U") {
    const Matrix X = gaussian(5, 2, 1);
    ProjectionOperator op(X);
    AdmmState s = AdmmState::random(5 * 4, 3);
    s.U = gaussian(20, 1, 4);
    const Vector ref = oracle::kron_projection(X, 4) * (s.theta + s.U);
    CHECK((eta_update(s, op) - ref).norm() < 1e-10);
    s.theta = fitted_means(X, gaussian(2, 4, 5));
    s.U.setZero();
    CHECK((eta_update(s, op) - s.theta).norm() < 1e-10);
}

TEST_CASE("mu update reduces to the 1-D solver") {
    const auto g = grid_graph({8});
    AdmmState s = AdmmState::random(8, 7);
    s.V = gaussian(8, 1, 8);
    SolverConfig c;
    c.lam = 1.3;
    c.admm_penalty = 2.0;
    CHECK((mu_update(s, g, c) - fl1d_solve(s.theta + s.V, 0.65)).norm() < 1e-12);
    c.lam = 0.0;
    CHECK((mu_update(s, g, c) - (s.theta + s.V)).norm() < 1e-12);
}

TEST_CASE("mu update does not depend on the batch layout") {
    const auto g = grid_graph({4, 3});
    const Index n = 7, M = 12;
    const Vector target = gaussian(n * M, 1, 9);
    GflConfig cfg;
    cfg.inner_tol = 1e-8;
    MuUpdater whole(g, n, cfg);
    const Vector ref = whole.update(target, 0.4);
    for (Index batch : {1, 2, 3, 5}) {
        for (int threads : {1, 3}) {
            MuUpdater u(g, n, cfg);
            CHECK((u.update(target, 0.4, batch, threads) - ref).lpNorm<Eigen::Infinity>() <= 1e-12);
        }
    }
    MuUpdater scattered(g, n, cfg);
    const std::vector<std::vector<Index>> odd{{6, 0}, {3}, {5, 1, 4, 2}};
    CHECK((scattered.update(target, 0.4, odd, 2) - ref).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("convergence check") {
    const Matrix X = gaussian(4, 2, 11);
    ProjectionOperator op(X);
    const Vector feas = fitted_means(X, gaussian(2, 3, 12));
    CHECK(convergence_check(feas, feas, op, 1e-4));
    CHECK_FALSE(convergence_check(1.1 * feas, feas, op, 1e-4));
    Vector off = gaussian(12, 1, 13);
    off -= op.apply(off);
    off *= 2e-4 * (1.0 + feas.norm()) / off.norm();
    const Vector infeasible = feas + off;
    CHECK_FALSE(convergence_check(infeasible, infeasible, op, 1e-4));
}

TEST_CASE("lambda zero reproduces OLS") {
    const Dataset d = tiny(12, 3, 10, 20);
    SolverConfig c;
    c.lam = 0.0;
    c.tol = 1e-9;
    c.max_iter = 5000;
    const FitResult r = fit(d, grid_graph({10}), c);
    CHECK(r.converged);
    CHECK((r.Gamma - ols_fit(d).Gamma).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("tiny instances match the dense oracle") {
    struct Case {
        Index n, p, M;
        IncidenceGraph g;
        double lam;
    };
    const std::vector<Case> cases{
        {3, 1, 4, grid_graph({4}), 0.5},
        {5, 2, 6, grid_graph({6}), 0.8},
        {6, 2, 6, grid_graph({3, 2}), 0.6},
        {4, 2, 5, add_lag_edges(grid_graph({5}), 2, 3), 0.4},
    };
    unsigned seed = 30;
    for (const auto& cs : cases) {
        const Dataset d = tiny(cs.n, cs.p, cs.M, seed++);
        const Matrix G = oracle::gfmr_solve(cs.g, d.X, d.Y, cs.lam);
        const double best = oracle::gfmr_objective(cs.g, d.X, d.Y, G, cs.lam);
        const FitResult r = fit(d, cs.g, tight(cs.lam));
        CHECK(r.converged);
        const double got = gfmr_objective(d, cs.g, r.Gamma, cs.lam);
        CHECK(std::abs(got - best) <= 1e-5 * best);
        CHECK(got == doctest::Approx(oracle::gfmr_objective(cs.g, d.X, d.Y, r.Gamma, cs.lam)));
        const double y_norm = d.Y.norm();
        CHECK(kkt_certificate(r, d, cs.g, cs.lam) <= 1e-5 * (1.0 + y_norm));
    }
}

TEST_CASE("KKT certificate separates optimal and perturbed fits") {
    const Dataset d = tiny(5, 2, 6, 40);
    const auto g = grid_graph({6});
    const FitResult r = fit(d, g, tight(0.7));
    const double at_opt = kkt_certificate(r, d, g, 0.7);
    FitResult moved = r;
    Matrix dir = Matrix::Zero(2, 6);
    dir(1, 0) = 1.0;
    moved.Gamma += 1e-2 * dir;
    moved.theta = fitted_means(d.X, moved.Gamma);
    CHECK(kkt_certificate(moved, d, g, 0.7) > at_opt);

    FitResult ols = ols_fit(d);
    CHECK(kkt_certificate(ols, d, g, 0.0) <= 1e-8);
}

TEST_CASE("a huge penalty flattens every fitted map") {
    const Index n = 6, M = 8;
    Dataset d{Matrix::Ones(n, 1), gaussian(n, M, 50), TensorShape({M})};
    SolverConfig c = tight(1e3);
    c.tol = 1e-8;
    const FitResult r = fit(d, grid_graph({M}), c);
    CHECK((r.Gamma.array() - d.Y.mean()).abs().maxCoeff() < 1e-5);
}

TEST_CASE("fits are deterministic for a fixed seed") {
    const Dataset d = tiny(9, 2, 12, 60);
    const auto g = grid_graph({4, 3});
    SolverConfig c;
    c.lam = 0.5;
    c.seed = 17;
    const FitResult a = fit(d, g, c);
    const FitResult b = fit(d, g, c);
    CHECK(a.Gamma == b.Gamma);
    CHECK(a.iterations == b.iterations);
    c.threads = 3;
    c.batch_size = 2;
    CHECK(fit(d, g, c).Gamma == a.Gamma);
}

TEST_CASE("diagnostics track every iteration") {
    const Dataset d = tiny(10, 2, 20, 70);
    SolverConfig c;
    c.lam = 1.0;
    const FitResult r = fit(d, grid_graph({20}), c);
    CHECK(r.converged);
    CHECK(static_cast<int>(r.diagnostics.size()) == r.iterations);
    const auto& last = r.diagnostics.back();
    CHECK(std::max(last.rel_change, last.feasibility) < c.tol);
}

TEST_CASE("errors") {
    const Dataset d = tiny(6, 2, 5, 80);
    SolverConfig c;
    c.lam = -1.0;
    CHECK_THROWS_AS(fit(d, grid_graph({5}), c), std::invalid_argument);
    c.lam = 1.0;
    CHECK_THROWS_AS(fit(d, grid_graph({6}), c), ShapeError);
    Dataset bad = d;
    bad.X.col(1) = bad.X.col(0);
    CHECK_THROWS_AS(fit(bad, grid_graph({5}), c), RankDeficientError);
}

TEST_CASE("cross-validation picks the best scoring lambda") {
    const Dataset d = tiny(20, 2, 10, 90);
    SolverConfig c;
    const auto cv = cross_validate_gfmr(d, grid_graph({10}), c, {0.0, 0.5, 2.0}, 4);
    REQUIRE(cv.scores.size() == 3);
    CHECK(cv.folds_used == 4);
    const auto best = std::min_element(cv.scores.begin(), cv.scores.end()) - cv.scores.begin();
    CHECK(cv.best_lambda == cv.lambdas[best]);
}
