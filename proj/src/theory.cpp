#include "gfmr/theory.hpp"

#include "gfmr/core_model.hpp"
#include "gfmr/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace gfmr {

namespace {

void check_edge_set(const IncidenceGraph& g, const std::vector<Index>& T) {
    if (T.empty()) throw std::invalid_argument("edge set T must be nonempty");
    std::vector<Index> sorted = T;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("edge set T has repeated edges");
    }
    if (sorted.front() < 0 || sorted.back() >= g.num_edges()) throw GraphError("edge id in T out of range");
}

// ||D_T s||^2 for the node vector w = D_T s.
double node_norm2(const std::vector<double>& w) {
    double s = 0.0;
    for (double x : w) s += x * x;
    return s;
}

}  // namespace

double inverse_scaling_factor(const IncidenceGraph& g, Index max_nodes) {
    if (g.num_edges() == 0) throw GraphError("inverse scaling factor needs at least one edge");
    const Index M = g.num_nodes();
    if (M > max_nodes) {
        throw std::invalid_argument("graph has " + std::to_string(M) + " nodes; dense pseudo-inverse capped at " +
                                    std::to_string(max_nodes));
    }
    Matrix L = Matrix::Zero(M, M);
    for (const Edge& e : g.edges()) {
        L(e.u, e.u) += 1.0;
        L(e.v, e.v) += 1.0;
        L(e.u, e.v) -= 1.0;
        L(e.v, e.u) -= 1.0;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(L);
    const Vector& values = eig.eigenvalues();
    const double cutoff = 1e-9 * std::max(1.0, values.maxCoeff());
    Vector inv = Vector::Zero(M);
    for (Index k = 0; k < M; ++k) {
        if (values[k] > cutoff) inv[k] = 1.0 / values[k];
    }
    const Matrix& V = eig.eigenvectors();
    const Matrix Lpinv = V * inv.asDiagonal() * V.transpose();

    double best = 0.0;
    for (const Edge& e : g.edges()) best = std::max(best, (Lpinv.col(e.u) - Lpinv.col(e.v)).norm());
    return best;
}

CompatibilityEstimate compatibility_factor(const IncidenceGraph& g, const std::vector<Index>& T, int exact_limit,
                                           int starts, std::uint64_t seed) {
    check_edge_set(g, T);
    const std::size_t t = T.size();
    const auto& edges = g.edges();
    std::vector<double> w(static_cast<std::size_t>(g.num_nodes()), 0.0);
    std::vector<double> s(t, 1.0);
    auto load = [&]() {
        std::fill(w.begin(), w.end(), 0.0);
        for (std::size_t k = 0; k < t; ++k) {
            const Edge& e = edges[T[k]];
            w[e.u] += s[k];
            w[e.v] -= s[k];
        }
    };

    CompatibilityEstimate out;
    double best2 = 0.0;
    if (static_cast<int>(t) <= exact_limit) {
        // Gray-code walk over sign patterns with s_0 = +1 (s and -s give the
        // same norm); each step flips one sign and updates ||w||^2 in O(1).
        load();
        double cur2 = node_norm2(w);
        best2 = cur2;
        const std::uint64_t patterns = std::uint64_t{1} << (t - 1);
        for (std::uint64_t step = 1; step < patterns; ++step) {
            const auto k = static_cast<std::size_t>(std::countr_zero(step)) + 1;
            const Edge& e = edges[T[k]];
            const double d = -2.0 * s[k];
            cur2 += (w[e.u] + d) * (w[e.u] + d) - w[e.u] * w[e.u];
            cur2 += (w[e.v] - d) * (w[e.v] - d) - w[e.v] * w[e.v];
            w[e.u] += d;
            w[e.v] -= d;
            s[k] = -s[k];
            best2 = std::max(best2, cur2);
        }
        out.exact = true;
    } else {
        std::mt19937_64 rng(seed);
        std::bernoulli_distribution coin(0.5);
        for (int start = 0; start < std::max(1, starts); ++start) {
            for (auto& x : s) x = coin(rng) ? 1.0 : -1.0;
            load();
            double cur2 = node_norm2(w);
            // Ascent: theta = w / ||w||, s <- sign((D^T theta)_T). Each step
            // does not decrease ||D_T s|| and the patterns are finite.
            for (int it = 0; it < 10000; ++it) {
                bool changed = false;
                for (std::size_t k = 0; k < t; ++k) {
                    const Edge& e = edges[T[k]];
                    const double diff = w[e.u] - w[e.v];
                    const double want = diff >= 0.0 ? 1.0 : -1.0;
                    if (want != s[k] && diff != 0.0) {
                        s[k] = want;
                        changed = true;
                    }
                }
                if (!changed) break;
                load();
                cur2 = node_norm2(w);
            }
            best2 = std::max(best2, cur2);
        }
    }
    out.sup = std::sqrt(best2);
    if (out.sup == 0.0) {
        out.infinite = true;
        out.kappa = std::numeric_limits<double>::infinity();
    } else {
        out.kappa = std::sqrt(static_cast<double>(t)) / out.sup;
    }
    return out;
}

double compatibility_lower_bound(Index max_degree, Index set_size) {
    if (max_degree < 1 || set_size < 1) throw std::invalid_argument("degree and set size must be positive");
    return 1.0 / (2.0 * std::sqrt(static_cast<double>(std::min(max_degree, set_size))));
}

std::vector<Index> jump_edges(const IncidenceGraph& g, const Matrix& theta_rows, double tol) {
    if (theta_rows.cols() != g.num_nodes()) throw ShapeError("rows must have one entry per node");
    std::vector<Index> out;
    for (Index j = 0; j < g.num_edges(); ++j) {
        const Edge& e = g.edges()[j];
        for (Index i = 0; i < theta_rows.rows(); ++i) {
            if (std::abs(theta_rows(i, e.u) - theta_rows(i, e.v)) > tol) {
                out.push_back(j);
                break;
            }
        }
    }
    return out;
}

void OracleBoundSpec::validate() const {
    if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be nonnegative");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    if (T.empty()) throw std::invalid_argument("edge set T must be nonempty");
    if (n < 1 || num_nodes < 1 || num_edges < 1) throw std::invalid_argument("n, M and m must be positive");
    if (!(inverse_scaling > 0.0)) throw std::invalid_argument("inverse scaling factor must be positive");
    if (!(compatibility > 0.0)) throw std::invalid_argument("compatibility factor must be positive");
}

double OracleBoundSpec::lambda() const {
    const double mnM = static_cast<double>(num_edges) * static_cast<double>(n) * static_cast<double>(num_nodes);
    return inverse_scaling * sigma * std::sqrt(std::log(mnM / delta));
}

OracleBoundSpec make_oracle_spec(const IncidenceGraph& g, Index n, double sigma, double delta,
                                 std::vector<Index> T) {
    OracleBoundSpec spec;
    spec.sigma = sigma;
    spec.delta = delta;
    spec.n = n;
    spec.num_nodes = g.num_nodes();
    spec.num_edges = g.num_edges();
    spec.inverse_scaling = inverse_scaling_factor(g);
    spec.compatibility = compatibility_factor(g, T).kappa;
    spec.T = std::move(T);
    spec.validate();
    return spec;
}

namespace {

// ||theta_bar - theta_star||^2 + 4 lam ||(D_v^T theta_bar)_{T^c}||_1 + 64 sigma^2 log(2 e n M / delta)
double shared_terms(const OracleBoundSpec& spec, const IncidenceGraph& g, const Vector& theta_bar,
                    const Vector& theta_star) {
    spec.validate();
    const Index M = spec.num_nodes;
    if (g.num_nodes() != M || g.num_edges() != spec.num_edges) throw ShapeError("graph does not match the spec");
    if (theta_bar.size() != spec.n * M || theta_star.size() != spec.n * M) throw ShapeError("theta length is not n*M");
    std::vector<char> in_T(static_cast<std::size_t>(g.num_edges()), 0);
    for (Index j : spec.T) in_T[j] = 1;
    double off_T = 0.0;
    for (Index i = 0; i < spec.n; ++i) {
        const Vector diff = incidence_apply(g, theta_bar.segment(i * M, M));
        for (Index j = 0; j < g.num_edges(); ++j) {
            if (!in_T[j]) off_T += std::abs(diff[j]);
        }
    }
    const double nM = static_cast<double>(spec.n) * static_cast<double>(M);
    return (theta_bar - theta_star).squaredNorm() + 4.0 * spec.lambda() * off_T +
           64.0 * spec.sigma * spec.sigma * std::log(2.0 * std::numbers::e * nM / spec.delta);
}

double log_mnM(const OracleBoundSpec& spec) {
    return std::log(static_cast<double>(spec.num_edges) * static_cast<double>(spec.n) *
                    static_cast<double>(spec.num_nodes) / spec.delta);
}

}  // namespace

double oracle_bound_rhs(const OracleBoundSpec& spec, const IncidenceGraph& g, const Vector& theta_bar,
                        const Vector& theta_star) {
    const double base = shared_terms(spec, g, theta_bar, theta_star);
    const double rho2 = spec.inverse_scaling * spec.inverse_scaling;
    const double tv = static_cast<double>(spec.n) * static_cast<double>(spec.T.size());
    return base + 8.0 * rho2 * spec.sigma * spec.sigma * log_mnM(spec) * tv /
                      (spec.compatibility * spec.compatibility);
}

double degree_bound_rhs(const OracleBoundSpec& spec, const IncidenceGraph& g, const Vector& theta_bar,
                        const Vector& theta_star) {
    const double base = shared_terms(spec, g, theta_bar, theta_star);
    const double rho2 = spec.inverse_scaling * spec.inverse_scaling;
    const double tv = static_cast<double>(spec.n) * static_cast<double>(spec.T.size());
    const double d = static_cast<double>(max_degree(g));
    return base + 2.0 * rho2 * spec.sigma * spec.sigma * log_mnM(spec) * tv / std::min(d, tv);
}

OracleCheckResult oracle_check(const IncidenceGraph& g, const Matrix& X, const Matrix& gamma_star, double sigma,
                               double delta, int replicates, std::uint64_t seed, const SolverConfig& cfg,
                               int threads) {
    if (replicates < 1) throw std::invalid_argument("need at least one replicate");
    if (X.cols() != gamma_star.rows() || gamma_star.cols() != g.num_nodes()) {
        throw ShapeError("design, coefficients and graph disagree");
    }
    const Index n = X.rows();
    const Index M = g.num_nodes();
    const Matrix mean = X * gamma_star;
    const Vector theta_star = stack_subjects(mean);
    const OracleBoundSpec spec = make_oracle_spec(g, n, sigma, delta, jump_edges(g, mean));

    OracleCheckResult out;
    out.replicates = replicates;
    out.lambda = spec.lambda();
    out.bound = oracle_bound_rhs(spec, g, theta_star, theta_star);

    SolverConfig c = cfg;
    // The oracle inequality is stated for ||y - theta||^2 + lam ||D_v^T theta||_1,
    // i.e. lam / 2 for the 1/2-scaled objective that fit() minimizes.
    c.lam = out.lambda / 2.0;
    c.threads = 1;
    const auto R = static_cast<std::size_t>(replicates);
    std::vector<double> err(R, 0.0);
    std::vector<char> conv(R, 0);
    parallel_for(replicates, threads, [&](Index r) {
        std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(r + 1));
        std::normal_distribution<double> normal(0.0, 1.0);
        Dataset data;
        data.X = X;
        data.Y = mean;
        data.shape = TensorShape({M});
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < M; ++j) data.Y(i, j) += sigma * normal(rng);
        }
        SolverConfig local = c;
        local.seed = seed + static_cast<std::uint64_t>(r);
        const FitResult res = fit(data, g, local);
        err[r] = (res.theta - theta_star).squaredNorm();
        conv[r] = res.converged;
    });
    // theta_hat is only known to the solver tolerance; without this the
    // noise-free case (bound 0) would count rounding as violations.
    out.slack = cfg.tol * (1.0 + theta_star.squaredNorm());
    int used = 0;
    for (std::size_t r = 0; r < R; ++r) {
        if (!conv[r]) {
            ++out.nonconverged;
            continue;
        }
        ++used;
        out.errors.push_back(err[r]);
        if (err[r] > out.bound + out.slack) ++out.violations;
    }
    out.violation_rate = used > 0 ? static_cast<double>(out.violations) / used : 0.0;
    return out;
}

}  // namespace gfmr
