#pragma once

// Dense reference solvers used only by the tests. They share no code with
// the library beyond the graph container.

#include "gfmr/graph.hpp"
#include "gfmr/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using gfmr::Index;
using gfmr::Matrix;
using gfmr::Vector;

// M x m incidence matrix, +1 at u and -1 at v of every edge.
inline Matrix incidence(const gfmr::IncidenceGraph& g) {
    Matrix D = Matrix::Zero(g.num_nodes(), g.num_edges());
    for (Index j = 0; j < g.num_edges(); ++j) {
        D(g.edges()[j].u, j) = 1.0;
        D(g.edges()[j].v, j) = -1.0;
    }
    return D;
}

// min_u 1/2 ||b - C^T u||^2  s.t. |u_k| <= lam, by cyclic coordinate descent.
// Returns u; the primal solution of the matching generalized lasso is b - C^T u.
inline Vector box_qp(const Matrix& C, const Vector& b, double lam, double tol = 1e-14, int max_sweeps = 2000000) {
    const Index K = C.rows();
    Vector u = Vector::Zero(K);
    Vector r = b;
    Vector norms(K);
    for (Index k = 0; k < K; ++k) norms[k] = C.row(k).squaredNorm();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double biggest = 0.0;
        for (Index k = 0; k < K; ++k) {
            if (norms[k] == 0.0) continue;
            const double step = C.row(k).dot(r) / norms[k];
            const double next = std::clamp(u[k] + step, -lam, lam);
            const double d = next - u[k];
            if (d != 0.0) {
                r -= d * C.row(k).transpose();
                u[k] = next;
                biggest = std::max(biggest, std::abs(d));
            }
        }
        if (biggest < tol) break;
    }
    return u;
}

// Graph fused lasso: min 1/2 ||y - mu||^2 + lam ||D^T mu||_1 via its dual.
inline Vector gfl(const gfmr::IncidenceGraph& g, const Vector& y, double lam) {
    const Matrix D = incidence(g);
    const Vector u = box_qp(D.transpose(), y, lam);
    return y - D * u;
}

inline double gfl_objective(const gfmr::IncidenceGraph& g, const Vector& y, const Vector& mu, double lam) {
    const Matrix D = incidence(g);
    return 0.5 * (y - mu).squaredNorm() + lam * (D.transpose() * mu).lpNorm<1>();
}

// Dense (H kron I_M) for subject-major stacking, H the hat matrix of X.
inline Matrix kron_projection(const Matrix& X, Index M) {
    const Matrix H = X * (X.transpose() * X).inverse() * X.transpose();
    const Index n = X.rows();
    Matrix P = Matrix::Zero(n * M, n * M);
    for (Index i = 0; i < n; ++i) {
        for (Index k = 0; k < n; ++k) {
            for (Index j = 0; j < M; ++j) P(i * M + j, k * M + j) = H(i, k);
        }
    }
    return P;
}

// Objective 1/2 ||Y - X G||^2 + lam sum_i ||D^T (X G)_i||_1 with G p x M.
inline double gfmr_objective(const gfmr::IncidenceGraph& g, const Matrix& X, const Matrix& Y, const Matrix& G,
                             double lam) {
    const Matrix D = incidence(g);
    const Matrix F = X * G;
    return 0.5 * (Y - F).squaredNorm() + lam * (F * D).cwiseAbs().sum();
}

// Exact minimizer of the objective above for tiny problems. With
// gamma = vec(G) (row-major over p x M), theta = A gamma and the penalty is
// ||B gamma||_1; QR of A turns it into a generalized lasso with identity
// loss, solved through the dual box QP.
inline Matrix gfmr_solve(const gfmr::IncidenceGraph& g, const Matrix& X, const Matrix& Y, double lam) {
    const Index n = X.rows();
    const Index p = X.cols();
    const Index M = g.num_nodes();
    const Index m = g.num_edges();
    Matrix A = Matrix::Zero(n * M, p * M);
    for (Index i = 0; i < n; ++i) {
        for (Index k = 0; k < p; ++k) {
            for (Index j = 0; j < M; ++j) A(i * M + j, k * M + j) = X(i, k);
        }
    }
    const Matrix D = incidence(g);
    Matrix Dv = Matrix::Zero(n * m, n * M);
    for (Index i = 0; i < n; ++i) Dv.block(i * m, i * M, m, M) = D.transpose();
    Vector y(n * M);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < M; ++j) y[i * M + j] = Y(i, j);
    }
    Eigen::HouseholderQR<Matrix> qr(A);
    const Matrix Q = qr.householderQ() * Matrix::Identity(n * M, p * M);
    const Matrix R = qr.matrixQR().topRows(p * M).triangularView<Eigen::Upper>();
    const Matrix Rinv = R.inverse();
    const Matrix C = Dv * A * Rinv;
    const Vector b = Q.transpose() * y;
    const Vector u = box_qp(C, b, lam);
    const Vector beta = b - C.transpose() * u;
    const Vector gamma = Rinv * beta;
    Matrix G(p, M);
    for (Index k = 0; k < p; ++k) {
        for (Index j = 0; j < M; ++j) G(k, j) = gamma[k * M + j];
    }
    return G;
}

// max_j ||column j of pinv(D^T)|| by SVD.
inline double inverse_scaling(const gfmr::IncidenceGraph& g) {
    const Matrix Dt = incidence(g).transpose();
    Eigen::JacobiSVD<Matrix> svd(Dt, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector s = svd.singularValues();
    Matrix inv = Matrix::Zero(Dt.cols(), Dt.rows());
    for (Index k = 0; k < s.size(); ++k) {
        if (s[k] > 1e-10 * s[0]) inv += svd.matrixV().col(k) * (1.0 / s[k]) * svd.matrixU().col(k).transpose();
    }
    double best = 0.0;
    for (Index j = 0; j < inv.cols(); ++j) best = std::max(best, inv.col(j).norm());
    return best;
}

// sup over the unit sphere of ||(D^T theta)_T||_1, by plain enumeration of
// all sign vectors on T with a dense matrix.
inline double compat_sup(const gfmr::IncidenceGraph& g, const std::vector<Index>& T) {
    const Matrix D = incidence(g);
    const auto t = static_cast<Index>(T.size());
    double best = 0.0;
    for (long long mask = 0; mask < (1LL << t); ++mask) {
        Vector w = Vector::Zero(g.num_nodes());
        for (Index k = 0; k < t; ++k) w += ((mask >> k) & 1 ? 1.0 : -1.0) * D.col(T[k]);
        best = std::max(best, w.norm());
    }
    return best;
}

// Projected subgradient ascent of ||(D^T theta)_T||_1 on the unit sphere
// from random starts: a lower estimate of the sup.
inline double compat_sup_ascent(const gfmr::IncidenceGraph& g, const std::vector<Index>& T, int starts,
                                unsigned seed) {
    const Matrix D = incidence(g);
    Matrix DT(g.num_nodes(), static_cast<Index>(T.size()));
    for (Index k = 0; k < DT.cols(); ++k) DT.col(k) = D.col(T[k]);
    std::mt19937 rng(seed);
    std::normal_distribution<double> normal;
    double best = 0.0;
    for (int s = 0; s < starts; ++s) {
        Vector theta(g.num_nodes());
        for (auto& x : theta) x = normal(rng);
        theta.normalize();
        for (int it = 0; it < 2000; ++it) {
            const Vector sign = (DT.transpose() * theta).unaryExpr([](double v) { return v >= 0 ? 1.0 : -1.0; });
            theta += 0.5 * DT * sign;
            theta.normalize();
        }
        best = std::max(best, (DT.transpose() * theta).lpNorm<1>());
    }
    return best;
}

}  // namespace oracle
