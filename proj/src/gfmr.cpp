#include "gfmr/gfmr.hpp"

#include "gfmr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace gfmr {

namespace {
constexpr double kCoarseInnerTol = 1e-3;
}  // namespace

void SolverConfig::validate() const {
    if (!(lam >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
    if (!(admm_penalty > 0.0)) throw std::invalid_argument("ADMM penalty must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be positive");
    if (batch_size < 0) throw std::invalid_argument("batch size must be nonnegative");
    gfl.validate();
}

AdmmState AdmmState::random(Index length, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    AdmmState s;
    s.theta.resize(length);
    s.mu.resize(length);
    s.eta.resize(length);
    for (Index i = 0; i < length; ++i) s.theta[i] = normal(rng);
    for (Index i = 0; i < length; ++i) s.mu[i] = normal(rng);
    for (Index i = 0; i < length; ++i) s.eta[i] = normal(rng);
    s.U = Vector::Zero(length);
    s.V = Vector::Zero(length);
    return s;
}

Vector theta_update(const AdmmState& state, const Vector& y, const SolverConfig& cfg) {
    const double rho = cfg.admm_penalty;
    if (y.size() != state.eta.size()) throw ShapeError("outcome length differs from iterate length");
    return (y + rho * (state.eta - state.U + state.mu - state.V)) / (2.0 * rho + 1.0);
}

Vector eta_update(const AdmmState& state, const ProjectionOperator& op) {
    return op.apply(state.theta + state.U);
}

std::vector<std::vector<Index>> contiguous_batches(Index n, Index batch_size) {
    if (batch_size <= 0 || batch_size > n) batch_size = n;
    std::vector<std::vector<Index>> batches;
    for (Index start = 0; start < n; start += batch_size) {
        std::vector<Index> b(static_cast<std::size_t>(std::min(batch_size, n - start)));
        std::iota(b.begin(), b.end(), start);
        batches.push_back(std::move(b));
    }
    return batches;
}

MuUpdater::MuUpdater(const IncidenceGraph& g, Index num_subjects, const GflConfig& cfg)
    : solver_(g, cfg), states_(static_cast<std::size_t>(num_subjects)) {}

Vector MuUpdater::update(const Vector& target, double lam, const std::vector<std::vector<Index>>& batches,
                         int threads) {
    const Index M = solver_.graph().num_nodes();
    const Index n = static_cast<Index>(states_.size());
    if (target.size() != n * M) throw ShapeError("mu-update target length is not n*M");
    Vector out(target.size());
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> iterations(static_cast<std::size_t>(n), 0);
    std::vector<char> ok(static_cast<std::size_t>(n), 1);
    for (const auto& batch : batches) {
        for (Index i : batch) {
            if (i < 0 || i >= n || seen[i]) throw std::invalid_argument("batches must partition the subjects");
            seen[i] = 1;
        }
        parallel_for(static_cast<Index>(batch.size()), threads, [&](Index b) {
            const Index i = batch[b];
            GflResult r = solver_.solve(target.segment(i * M, M), lam, &states_[i], tol_);
            out.segment(i * M, M) = r.mu;
            iterations[i] = r.iterations;
            ok[i] = r.converged;
        });
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
        throw std::invalid_argument("batches must partition the subjects");
    }
    last_converged_ = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
    last_max_iterations_ = iterations.empty() ? 0 : *std::max_element(iterations.begin(), iterations.end());
    return out;
}

Vector MuUpdater::update(const Vector& target, double lam, Index batch_size, int threads) {
    return update(target, lam, contiguous_batches(static_cast<Index>(states_.size()), batch_size), threads);
}

Vector mu_update(const AdmmState& state, const IncidenceGraph& g, const SolverConfig& cfg) {
    const Index M = g.num_nodes();
    if (M == 0 || state.theta.size() % M != 0) throw ShapeError("iterate length is not a multiple of M");
    GflConfig gcfg = cfg.gfl;
    gcfg.warm_start = false;
    MuUpdater updater(g, state.theta.size() / M, gcfg);
    return updater.update(state.theta + state.V, cfg.lam / cfg.admm_penalty, cfg.batch_size, cfg.threads);
}

IterationRecord convergence_measures(const Vector& theta_new, const Vector& theta_old,
                                     const ProjectionOperator& op) {
    IterationRecord rec;
    const double base = theta_old.norm();
    const double change = (theta_new - theta_old).norm();
    rec.rel_change = base > 0.0 ? change / base : change;
    rec.feasibility = (theta_new - op.apply(theta_new)).norm() / (1.0 + theta_new.norm());
    return rec;
}

bool convergence_check(const Vector& theta_new, const Vector& theta_old, const ProjectionOperator& op,
                       double tol) {
    const IterationRecord rec = convergence_measures(theta_new, theta_old, op);
    return std::max(rec.rel_change, rec.feasibility) < tol;
}

double gfmr_objective(const Dataset& data, const IncidenceGraph& g, const Matrix& Gamma, double lam) {
    const Matrix fitted = data.X * Gamma;
    double tv = 0.0;
    for (Index i = 0; i < fitted.rows(); ++i) {
        for (const Edge& e : g.edges()) tv += std::abs(fitted(i, e.u) - fitted(i, e.v));
    }
    return 0.5 * (data.Y - fitted).squaredNorm() + lam * tv;
}

FitResult fit(const Dataset& data, const IncidenceGraph& g, const SolverConfig& cfg) {
    data.validate();
    cfg.validate();
    if (g.num_nodes() != data.M()) {
        throw ShapeError("graph has " + std::to_string(g.num_nodes()) + " nodes but outcomes have " +
                         std::to_string(data.M()) + " voxels");
    }
    const ProjectionOperator op(data.X);
    const Vector y = stack_subjects(data.Y);
    const double rho = cfg.admm_penalty;
    const double inner_lam = cfg.lam / rho;

    AdmmState state = AdmmState::random(y.size(), cfg.seed);
    MuUpdater updater(g, data.n(), cfg.gfl);
    const auto batches = contiguous_batches(data.n(), cfg.batch_size);

    FitResult result;
    double measure = 1.0;
    while (state.k < cfg.max_iter) {
        const Vector theta_old = state.theta;
        state.theta = theta_update(state, y, cfg);
        state.eta = eta_update(state, op);
        // Inexact subproblems early on, tightening to inner_tol as the outer
        // residual shrinks.
        updater.set_tolerance(std::max(cfg.gfl.inner_tol, std::min(kCoarseInnerTol, 0.1 * measure)));
        state.mu = updater.update(state.theta + state.V, inner_lam, batches, cfg.threads);
        result.inner_converged = result.inner_converged && updater.last_converged();
        state.U += state.theta - state.eta;
        state.V += state.theta - state.mu;
        ++state.k;

        IterationRecord rec = convergence_measures(state.theta, theta_old, op);
        rec.objective = gfmr_objective(data, g, gamma_from_theta(op, state.theta), cfg.lam);
        result.diagnostics.push_back(rec);
        measure = std::max(rec.rel_change, rec.feasibility);
        if (measure < cfg.tol) {
            result.converged = true;
            break;
        }
    }
    result.iterations = state.k;
    result.Gamma = gamma_from_theta(op, state.theta);
    result.theta = fitted_means(data.X, result.Gamma);
    return result;
}

double kkt_certificate(const FitResult& result, const Dataset& data, const IncidenceGraph& g, double lam,
                       std::optional<double> activity_tol) {
    data.validate();
    const Index n = data.n();
    const Index M = data.M();
    const Index m = g.num_edges();
    if (g.num_nodes() != M || result.theta.size() != n * M) throw ShapeError("certificate inputs disagree");
    const ProjectionOperator op(data.X);
    const Matrix H = op.basis() * op.basis().transpose();
    const Vector y = stack_subjects(data.Y);
    const double thr = activity_tol.value_or(1e-6 * std::max(1.0, result.theta.lpNorm<Eigen::Infinity>()));

    // Fixed part of z on active edges, free coordinates elsewhere.
    Vector z = Vector::Zero(n * m);
    std::vector<Index> free;
    Vector Dz(n * M);
    for (Index i = 0; i < n; ++i) {
        const Vector diff = incidence_apply(g, result.theta.segment(i * M, M));
        for (Index j = 0; j < m; ++j) {
            if (std::abs(diff[j]) > thr) {
                z[i * m + j] = diff[j] > 0 ? 1.0 : -1.0;
            } else {
                free.push_back(i * m + j);
            }
        }
        Dz.segment(i * M, M) = incidence_adjoint(g, z.segment(i * m, m));
    }
    Vector r = op.apply(result.theta - y) + lam * op.apply(Dz);
    if (lam == 0.0 || free.empty()) return r.norm();

    // Column (i, j) of lam P D_v is lam * H[:, i] kron (s_j (e_u - e_v)).
    const auto& edges = g.edges();
    const double scale = std::max(1.0, r.norm());
    for (int sweep = 0; sweep < 100000; ++sweep) {
        double largest_step = 0.0;
        for (Index c : free) {
            const Index i = c / m;
            const Index j = c % m;
            const double s = g.orientation(j);
            const Index u = edges[j].u;
            const Index v = edges[j].v;
            const double col_sq = lam * lam * 2.0 * H(i, i);
            if (col_sq <= 0.0) continue;
            double grad = 0.0;
            for (Index k = 0; k < n; ++k) grad += H(k, i) * (r[k * M + u] - r[k * M + v]);
            grad *= lam * s;
            const double next = std::clamp(z[c] - grad / col_sq, -1.0, 1.0);
            const double step = next - z[c];
            if (step == 0.0) continue;
            z[c] = next;
            for (Index k = 0; k < n; ++k) {
                const double delta = lam * s * H(k, i) * step;
                r[k * M + u] += delta;
                r[k * M + v] -= delta;
            }
            largest_step = std::max(largest_step, std::abs(step) * std::sqrt(col_sq));
        }
        if (largest_step < 1e-15 * scale) break;
    }
    // Recompute to shed accumulated rounding in r.
    for (Index i = 0; i < n; ++i) Dz.segment(i * M, M) = incidence_adjoint(g, z.segment(i * m, m));
    return (op.apply(result.theta - y) + lam * op.apply(Dz)).norm();
}

Dataset subset_subjects(const Dataset& data, const std::vector<Index>& rows) {
    Dataset out;
    out.shape = data.shape;
    out.X.resize(static_cast<Index>(rows.size()), data.p());
    out.Y.resize(static_cast<Index>(rows.size()), data.M());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out.X.row(static_cast<Index>(k)) = data.X.row(rows[k]);
        out.Y.row(static_cast<Index>(k)) = data.Y.row(rows[k]);
    }
    return out;
}

CvResult cross_validate(const Dataset& data, const std::vector<double>& lambdas, int folds, std::uint64_t seed,
                        const CoefficientFitter& fitter) {
    data.validate();
    if (lambdas.empty()) throw std::invalid_argument("empty lambda grid");
    if (folds < 2 || folds > data.n()) throw std::invalid_argument("fold count must lie in [2, n]");
    std::vector<Index> order(static_cast<std::size_t>(data.n()));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    CvResult cv;
    cv.lambdas = lambdas;
    cv.scores.assign(lambdas.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
        std::vector<Index> train;
        std::vector<Index> test;
        for (std::size_t k = 0; k < order.size(); ++k) {
            (static_cast<int>(k % folds) == f ? test : train).push_back(order[k]);
        }
        const Dataset train_set = subset_subjects(data, train);
        const Dataset test_set = subset_subjects(data, test);
        std::vector<double> fold_scores;
        try {
            for (double lam : lambdas) {
                const Matrix Gamma = fitter(train_set, lam);
                fold_scores.push_back((test_set.Y - test_set.X * Gamma).squaredNorm());
            }
        } catch (const RankDeficientError&) {
            continue;
        }
        for (std::size_t l = 0; l < lambdas.size(); ++l) cv.scores[l] += fold_scores[l];
        ++cv.folds_used;
    }
    if (cv.folds_used == 0) throw RankDeficientError("every cross-validation training fold is rank deficient");
    const auto best = std::min_element(cv.scores.begin(), cv.scores.end());
    cv.best_lambda = lambdas[static_cast<std::size_t>(best - cv.scores.begin())];
    return cv;
}

CvResult cross_validate_gfmr(const Dataset& data, const IncidenceGraph& g, const SolverConfig& cfg,
                             const std::vector<double>& lambdas, int folds) {
    return cross_validate(data, lambdas, folds, cfg.seed, [&](const Dataset& train, double lam) {
        SolverConfig c = cfg;
        c.lam = lam;
        return fit(train, g, c).Gamma;
    });
}

}  // namespace gfmr
