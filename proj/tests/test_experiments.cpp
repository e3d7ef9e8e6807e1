#include "doctest.h"

#include "gfmr/experiments.hpp"

#include <cmath>
#include <sstream>

using namespace gfmr;

TEST_CASE("setting 1 maps at known points") {
    const Matrix G = setting_1d1_maps();
    CHECK(G.rows() == 4);
    CHECK(G.cols() == 200);
    CHECK(std::abs(G(2, 49)) < 1e-15);        // X2 at t = 50
    CHECK(G(1, 99) == doctest::Approx(-0.5));  // X1 at t = 100
    CHECK(G.row(3).norm() == 0.0);
}

TEST_CASE("setting 2 windows") {
    const Matrix G = setting_1d2_maps();
    CHECK(G(0, 9) == 1.0);    // intercept at j = 10
    CHECK(G(0, 24) == 0.0);   // j = 25
    CHECK(G(2, 74) == -1.0);  // X2 at j = 75
    for (Index j = 0; j < 100; ++j) CHECK(G.col(j) == G.col(j + 100));
}

TEST_CASE("2-D maps") {
    const Matrix G2 = setting_2d2_maps();
    CHECK(G2.rows() == 3);
    CHECK(G2.row(0).norm() == 0.0);
    CHECK(G2.row(1).squaredNorm() == doctest::Approx(6 * 38.0));
    CHECK(G2.row(2).squaredNorm() == doctest::Approx(6 * 38.0));
    // X2's map is X1's transposed
    for (Index r = 0; r < 40; ++r)
        for (Index c = 0; c < 40; ++c) CHECK(G2(2, r + 40 * c) == G2(1, c + 40 * r));
    const Matrix G1 = setting_2d1_maps();
    CHECK(G1.row(0).sum() == doctest::Approx(225.0));
    CHECK(G1(0, 5 + 40 * 5) == 1.0);
    CHECK(G1(0, 4 + 40 * 5) == 0.0);
    CHECK(G1.row(2).sum() == doctest::Approx(196 * 0.02));
}

TEST_CASE("generators are reproducible and seed dependent") {
    for (auto s : {Setting::OneD1, Setting::OneD2, Setting::TwoD1, Setting::TwoD2}) {
        const auto a = generate(s, 10, 42);
        const auto b = generate(s, 10, 42);
        const auto c = generate(s, 10, 43);
        CHECK(a.data.Y == b.data.Y);
        CHECK(a.data.X == b.data.X);
        CHECK(a.data.Y != c.data.Y);
        CHECK_NOTHROW(a.data.validate());
        CHECK(a.gamma_star.cols() == a.data.M());
    }
}

TEST_CASE("noiseless data give back the maps through OLS") {
    for (auto s : {Setting::OneD1, Setting::OneD2, Setting::TwoD1, Setting::TwoD2}) {
        const auto sim = generate(s, 100, 7, 0.0);
        CHECK((ols_fit(sim.data).Gamma - sim.gamma_star).lpNorm<Eigen::Infinity>() < 1e-8);
    }
}

TEST_CASE("noise level") {
    CHECK(default_noise_sd(Setting::OneD2) == 2.0);
    CHECK(default_noise_sd(Setting::TwoD2) == doctest::Approx(std::sqrt(2.0)));
    const auto sim = generate(Setting::TwoD2, 625, 3);
    const Matrix eps = sim.data.Y - sim.data.X * sim.gamma_star;
    const double var = (eps.array() - eps.mean()).square().sum() / static_cast<double>(eps.size() - 1);
    CHECK(eps.size() == 1000000);
    CHECK(std::abs(var - 2.0) < 0.1);
}

TEST_CASE("categorical covariates are one-hot or absent") {
    const auto sim = generate(Setting::OneD1, 2000, 9);
    int c1 = 0, c2 = 0;
    for (Index i = 0; i < 2000; ++i) {
        const double x1 = sim.data.X(i, 1), x2 = sim.data.X(i, 2);
        CHECK(x1 * x2 == 0.0);
        c1 += x1 == 1.0;
        c2 += x2 == 1.0;
    }
    CHECK(std::abs(c1 / 2000.0 - 0.25) < 0.04);
    CHECK(std::abs(c2 / 2000.0 - 0.25) < 0.04);
    const auto two = generate(Setting::TwoD1, 500, 9);
    CHECK(two.data.X.col(2).minCoeff() >= 56);
    CHECK(two.data.X.col(2).maxCoeff() <= 75);
}

TEST_CASE("setting graphs") {
    CHECK(setting_graph(Setting::OneD2).num_edges() == 199);
    CHECK(setting_graph(Setting::OneD2, true).num_edges() == 299);
    CHECK(setting_graph(Setting::TwoD1).num_edges() == 2 * 40 * 39);
    CHECK_THROWS(setting_graph(Setting::TwoD2, true));
}

TEST_CASE("mean deviation") {
    const Matrix a = Matrix::Random(3, 7);
    CHECK(mean_deviation(a, a) == 0.0);
    CHECK(mean_deviation(a + Matrix::Ones(3, 7), a) == doctest::Approx(1.0));
    const Matrix b = Matrix::Random(3, 7);
    double sum = 0.0;
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 7; ++j) sum += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
    CHECK(mean_deviation(a, b) == doctest::Approx(std::sqrt(sum / 21.0)));
}

TEST_CASE("replicate seeds differ") {
    CHECK(replicate_seed(1, 0) != replicate_seed(1, 1));
    CHECK(replicate_seed(1, 0) != replicate_seed(2, 0));
    CHECK(replicate_seed(5, 3) == replicate_seed(5, 3));
}

TEST_CASE("names round trip") {
    for (auto s : {Setting::OneD1, Setting::OneD2, Setting::TwoD1, Setting::TwoD2})
        CHECK(parse_setting(to_string(s)) == s);
    for (auto m : {Method::Gfmr, Method::GfmrPeriodic, Method::TvOls, Method::OlsTv, Method::Ols})
        CHECK(parse_method(to_string(m)) == m);
    CHECK_THROWS(parse_setting("3d"));
    CHECK(format_mean_sd(0.0763, 0.0091) == "0.076(0.009)");
}

TEST_CASE("empirical quantile interpolates") {
    const std::vector<double> x{4, 1, 3, 2, 5};
    CHECK(empirical_quantile(x, 0.0) == 1.0);
    CHECK(empirical_quantile(x, 1.0) == 5.0);
    CHECK(empirical_quantile(x, 0.5) == 3.0);
    CHECK(empirical_quantile(x, 0.1) == doctest::Approx(1.4));
    CHECK(empirical_quantile({1, 2, 3, 4}, 0.975) == doctest::Approx(3.925));
}

TEST_CASE("replicates with a fixed lambda") {
    SimSpec spec;
    spec.setting = Setting::OneD2;
    spec.n = 20;
    spec.replicates = 3;
    SolverConfig cfg;
    const auto ols = run_replicates(spec, Method::Ols, cfg);
    CHECK(ols.deviations.size() == 3);
    CHECK(ols.failures == 0);
    const auto gf = run_replicates(spec, Method::Gfmr, cfg, 2.0);
    CHECK(gf.lambda == 2.0);
    CHECK(gf.mean < ols.mean);
    std::ostringstream out;
    write_summary_csv(out, spec, {ols, gf});
    const std::string text = out.str();
    CHECK(text.rfind("setting,n,method,lambda,mean,sd,cell,replicates,failures\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("failed replicates are left out of the summary") {
    SimSpec spec;
    spec.setting = Setting::OneD2;
    spec.n = 6;  // small enough that some designs miss a category
    spec.replicates = 12;
    const auto s = run_replicates(spec, Method::Ols, SolverConfig{});
    REQUIRE(s.deviations.size() == 12);
    std::vector<double> ok;
    for (double d : s.deviations)
        if (!std::isnan(d)) ok.push_back(d);
    CHECK(s.failures > 0);
    CHECK(s.failures == 12 - static_cast<int>(ok.size()));
    double mean = 0.0;
    for (double d : ok) mean += d;
    CHECK(s.mean == doctest::Approx(mean / static_cast<double>(ok.size())));
}

TEST_CASE("bootstrap bands") {
    auto sim = generate(Setting::OneD2, 30, 11, 0.0);
    SolverConfig cfg;
    // noiseless data are fitted exactly only without shrinkage
    cfg.lam = 0.0;
    cfg.tol = 1e-10;
    cfg.max_iter = 5000;
    const auto bands = bootstrap_ci(sim.data, setting_graph(Setting::OneD2), cfg, 10, 0.95, 1);
    CHECK(bands.draws == 10);
    CHECK((bands.upper - bands.lower).maxCoeff() <= 1e-6);
    CHECK((bands.estimate - sim.gamma_star).lpNorm<Eigen::Infinity>() <= 1e-6);
    cfg.lam = 0.5;
    cfg.tol = 1e-4;
    CHECK_THROWS(bootstrap_ci(sim.data, setting_graph(Setting::OneD2), cfg, 5, 0.95, 1));

    sim = generate(Setting::OneD2, 30, 12);
    const auto noisy = bootstrap_ci(sim.data, setting_graph(Setting::OneD2), cfg, 20, 0.9, 2);
    CHECK((noisy.lower.array() <= noisy.upper.array()).all());
    CHECK((noisy.upper - noisy.lower).mean() > 0.0);
}
