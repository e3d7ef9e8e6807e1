#include "doctest.h"

#include "gfmr/baselines.hpp"
#include "gfmr/experiments.hpp"
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

}  // namespace

TEST_CASE("zero penalty reproduces OLS") {
    Matrix X = gaussian(10, 2, 1);
    X.col(0).setOnes();
    Dataset d{X, gaussian(10, 9, 2), TensorShape({3, 3})};
    const auto g = grid_graph({3, 3});
    const Matrix ols = ols_fit(d).Gamma;
    CHECK((tv_ols_fit(d, g, 0.0) - ols).norm() < 1e-8);
    CHECK((ols_tv_fit(d, g, 0.0) - ols).norm() < 1e-8);
}

TEST_CASE("tv denoise agrees with the dense oracle") {
    const auto g = grid_graph({4, 3});
    const Vector y = gaussian(12, 1, 3);
    GflConfig c;
    c.inner_tol = 1e-10;
    c.inner_max_iter = 100000;
    CHECK((tv_denoise(g, y, 0.5, c) - oracle::gfl(g, y, 0.5)).lpNorm<Eigen::Infinity>() < 1e-4);
}

TEST_CASE("single subject reduces to denoising") {
    Dataset d{Matrix::Ones(1, 1), gaussian(1, 8, 4), TensorShape({8})};
    const auto g = grid_graph({8});
    const Vector ref = tv_denoise(g, d.Y.row(0).transpose(), 0.6);
    CHECK((tv_ols_fit(d, g, 0.6).row(0).transpose() - ref).norm() < 1e-10);
}

TEST_CASE("intercept-only OLS_TV denoises the voxel means") {
    Dataset d{Matrix::Ones(6, 1), gaussian(6, 10, 5), TensorShape({10})};
    const auto g = grid_graph({10});
    const Vector means = d.Y.colwise().mean().transpose();
    CHECK((ols_tv_fit(d, g, 0.3).row(0).transpose() - fl1d_solve(means, 0.3)).norm() < 1e-10);
}

TEST_CASE("noiseless blocks survive a small penalty") {
    Matrix X = gaussian(15, 2, 6);
    X.col(0).setOnes();
    Matrix G = Matrix::Zero(2, 12);
    G.row(0).segment(0, 6).setConstant(2.0);
    G.row(1).segment(6, 6).setConstant(-1.0);
    Dataset d{X, X * G, TensorShape({12})};
    const auto g = grid_graph({12});
    CHECK((tv_ols_fit(d, g, 1e-4) - G).lpNorm<Eigen::Infinity>() < 1e-3);
    CHECK((ols_tv_fit(d, g, 1e-4) - G).lpNorm<Eigen::Infinity>() < 1e-3);
}

TEST_CASE("threads do not change the baselines") {
    Matrix X = gaussian(9, 2, 7);
    X.col(0).setOnes();
    Dataset d{X, gaussian(9, 16, 8), TensorShape({4, 4})};
    const auto g = grid_graph({4, 4});
    CHECK(tv_ols_fit(d, g, 0.4, {}, 1) == tv_ols_fit(d, g, 0.4, {}, 3));
    CHECK(ols_tv_fit(d, g, 0.4, {}, 1) == ols_tv_fit(d, g, 0.4, {}, 3));
}
