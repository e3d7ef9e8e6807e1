#include "gfmr/fused_lasso.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gfmr {

namespace {

void check_input(std::span<const double> y, std::span<const double> w, double lam) {
    if (!(lam >= 0.0)) throw std::invalid_argument("fused lasso penalty must be nonnegative");
    if (!w.empty() && w.size() != y.size()) throw ShapeError("weight vector length differs from signal");
    for (double v : y) {
        if (std::isnan(v)) throw std::invalid_argument("NaN in fused lasso input");
    }
    for (double v : w) {
        if (!(v > 0.0)) throw std::invalid_argument("fused lasso weights must be positive");
    }
}

}  // namespace

// The derivative of the forward message is an increasing piecewise-linear
// function stored as knots in a deque (x_, a_, b_) over [lo, hi]: crossing
// knot x from left to right adds a*t + b to the derivative. Its left tail
// is -lam and its right tail +lam, so the derivative of the next node's
// partial objective has known tails and the thresholds where it hits
// -lam / +lam are found by popping knots from either end.
void Fl1dWorkspace::solve(std::span<const double> y, std::span<const double> w, double lam,
                          std::span<double> out) {
    const std::size_t n = y.size();
    if (out.size() != n) throw ShapeError("output length differs from signal");
    if (n == 0) return;
    if (n == 1 || lam == 0.0) {
        std::copy(y.begin(), y.end(), out.begin());
        return;
    }
    auto weight = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };

    x_.resize(2 * n + 2);
    a_.resize(2 * n + 2);
    b_.resize(2 * n + 2);
    lower_.resize(n);
    upper_.resize(n);
    std::ptrdiff_t lo = static_cast<std::ptrdiff_t>(n) + 1;
    std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n);

    // First node: derivative w0 (t - y0), thresholds are explicit.
    {
        const double w0 = weight(0);
        lower_[0] = y[0] - lam / w0;
        upper_[0] = y[0] + lam / w0;
        --lo;
        x_[lo] = lower_[0];
        a_[lo] = w0;
        b_[lo] = -w0 * y[0] + lam;
        ++hi;
        x_[hi] = upper_[0];
        a_[hi] = -w0;
        b_[hi] = w0 * y[0] + lam;
    }

    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double wk = weight(k);
        // Left threshold: derivative equals -lam.
        double A = wk;
        double B = -wk * y[k] - lam;
        while (lo <= hi && A * x_[lo] + B <= -lam) {
            A += a_[lo];
            B += b_[lo];
            ++lo;
        }
        const double t_minus = (-lam - B) / A;
        --lo;
        x_[lo] = t_minus;
        a_[lo] = A;
        b_[lo] = B + lam;

        // Right threshold: derivative equals +lam. Never pops the knot just
        // pushed at t_minus (where the derivative is -lam).
        A = wk;
        B = -wk * y[k] + lam;
        while (hi > lo && A * x_[hi] + B >= lam) {
            A -= a_[hi];
            B -= b_[hi];
            --hi;
        }
        const double t_plus = std::max((lam - B) / A, t_minus);
        ++hi;
        x_[hi] = t_plus;
        a_[hi] = -A;
        b_[hi] = lam - B;

        lower_[k] = t_minus;
        upper_[k] = t_plus;
    }

    // Last node: root of the full derivative.
    const std::size_t last = n - 1;
    double A = weight(last);
    double B = -weight(last) * y[last] - lam;
    while (lo <= hi && A * x_[lo] + B <= 0.0) {
        A += a_[lo];
        B += b_[lo];
        ++lo;
    }
    out[last] = -B / A;
    for (std::size_t k = last; k-- > 0;) {
        out[k] = std::clamp(out[k + 1], lower_[k], upper_[k]);
    }
}

Vector fl1d_solve(const Vector& y, const Vector& node_weights, double lam) {
    std::span<const double> ys(y.data(), static_cast<std::size_t>(y.size()));
    std::span<const double> ws(node_weights.data(), static_cast<std::size_t>(node_weights.size()));
    check_input(ys, ws, lam);
    Vector out(y.size());
    Fl1dWorkspace workspace;
    workspace.solve(ys, ws, lam, {out.data(), static_cast<std::size_t>(out.size())});
    return out;
}

Vector fl1d_solve(const Vector& y, double lam) { return fl1d_solve(y, Vector(), lam); }

void GflConfig::validate() const {
    if (!(inner_penalty > 0.0)) throw std::invalid_argument("inner_penalty must be positive");
    if (!(inner_tol > 0.0 && inner_tol < 1.0)) throw std::invalid_argument("inner_tol must lie in (0, 1)");
    if (!(relaxation > 0.0 && relaxation < 2.0)) throw std::invalid_argument("relaxation must lie in (0, 2)");
    if (inner_max_iter < 1) throw std::invalid_argument("inner_max_iter must be positive");
}

double gfl_objective(const IncidenceGraph& g, const Vector& y, const Vector& mu, double lam) {
    return 0.5 * (y - mu).squaredNorm() + lam * total_variation(g, mu);
}

GflSolver::GflSolver(const IncidenceGraph& g, GflConfig cfg)
    : graph_(g), cfg_(cfg), trails_(decompose_trails(g)) {
    cfg_.validate();
    visits_ = Vector::Zero(g.num_nodes());
    trail_start_.push_back(0);
    for (const auto& trail : trails_.trails) {
        for (Index node : trail) {
            position_node_.push_back(node);
            visits_[node] += 1.0;
        }
        trail_start_.push_back(static_cast<Index>(position_node_.size()));
    }
    exact_ = visits_.size() == 0 || visits_.maxCoeff() <= 1.0;
}

GflResult GflSolver::solve(const Vector& y, double lam, GflState* state, std::optional<double> tol) const {
    const Index M = graph_.num_nodes();
    if (y.size() != M) throw ShapeError("signal length differs from node count");
    if (!(lam >= 0.0)) throw std::invalid_argument("fused lasso penalty must be nonnegative");
    for (Index i = 0; i < M; ++i) {
        if (std::isnan(y[i])) throw std::invalid_argument("NaN in fused lasso input");
    }

    const Index P = static_cast<Index>(position_node_.size());
    const Index num_trails = static_cast<Index>(trails_.trails.size());
    Fl1dWorkspace workspace;
    GflResult result;

    if (exact_ || lam == 0.0) {
        result.mu = y;
        if (lam > 0.0) {
            std::vector<double> in;
            std::vector<double> out;
            for (Index t = 0; t < num_trails; ++t) {
                const Index begin = trail_start_[t];
                const Index len = trail_start_[t + 1] - begin;
                in.resize(static_cast<std::size_t>(len));
                out.resize(static_cast<std::size_t>(len));
                for (Index k = 0; k < len; ++k) in[k] = y[position_node_[begin + k]];
                workspace.solve(in, {}, lam, out);
                for (Index k = 0; k < len; ++k) result.mu[position_node_[begin + k]] = out[k];
            }
        }
        result.iterations = 1;
        result.converged = true;
        if (cfg_.record_objective) result.objective.push_back(gfl_objective(graph_, y, result.mu, lam));
        if (state) {
            state->mu = result.mu;
            state->z.resize(P);
            for (Index p = 0; p < P; ++p) state->z[p] = result.mu[position_node_[p]];
            state->u = Vector::Zero(P);
        }
        return result;
    }

    const double a = cfg_.inner_penalty;
    const double alpha = cfg_.relaxation;
    const double stop = tol.value_or(cfg_.inner_tol) * std::max(1.0, y.norm());
    Vector mu;
    Vector z;
    Vector u;
    if (state && cfg_.warm_start && state->mu.size() == M && state->z.size() == P && state->u.size() == P) {
        mu = state->mu;
        z = state->z;
        u = state->u;
    } else {
        mu = y;
        z.resize(P);
        for (Index p = 0; p < P; ++p) z[p] = y[position_node_[p]];
        u = Vector::Zero(P);
    }

    const double trail_lam = lam / a;
    const Vector denom = (a * visits_).array() + 1.0;
    Vector accum(M);
    Vector z_old(P);
    Vector dz_nodes(M);
    std::vector<double> in;

    Vector best = mu;
    double best_objective = gfl_objective(graph_, y, mu, lam);
    int it = 0;
    bool converged = false;
    while (it < cfg_.inner_max_iter) {
        ++it;
        accum.setZero();
        for (Index p = 0; p < P; ++p) accum[position_node_[p]] += z[p] - u[p];
        mu = ((y + a * accum).array() / denom.array()).matrix();

        z_old = z;
        for (Index t = 0; t < num_trails; ++t) {
            const Index begin = trail_start_[t];
            const Index len = trail_start_[t + 1] - begin;
            in.resize(static_cast<std::size_t>(len));
            for (Index k = 0; k < len; ++k) {
                in[k] = alpha * mu[position_node_[begin + k]] + (1.0 - alpha) * z_old[begin + k] + u[begin + k];
            }
            workspace.solve(in, {}, trail_lam, {z.data() + begin, static_cast<std::size_t>(len)});
        }

        double primal = 0.0;
        dz_nodes.setZero();
        for (Index p = 0; p < P; ++p) {
            const double x = mu[position_node_[p]];
            const double r = x - z[p];
            u[p] += alpha * x + (1.0 - alpha) * z_old[p] - z[p];
            primal += r * r;
            dz_nodes[position_node_[p]] += z[p] - z_old[p];
        }
        const double dual = a * dz_nodes.norm();
        const double objective = gfl_objective(graph_, y, mu, lam);
        if (objective <= best_objective) {
            best_objective = objective;
            best = mu;
        }
        if (cfg_.record_objective) result.objective.push_back(best_objective);
        if (std::sqrt(primal) + dual <= stop) {
            converged = true;
            break;
        }
    }

    result.mu = std::move(best);
    result.iterations = it;
    result.converged = converged;
    if (state) {
        state->mu = std::move(mu);
        state->z = std::move(z);
        state->u = std::move(u);
    }
    return result;
}

GflResult gfl_solve(const IncidenceGraph& g, const Vector& y, double lam, const GflConfig& cfg,
                    const std::optional<Vector>& warm) {
    GflSolver solver(g, cfg);
    if (warm) {
        GflState state;
        state.mu = *warm;
        // Replicas start at the warm node values with zero duals.
        const auto& trails = solver.trails();
        state.z.resize(trails.num_positions());
        Index p = 0;
        for (const auto& trail : trails.trails) {
            for (Index node : trail) state.z[p++] = (*warm)[node];
        }
        state.u = Vector::Zero(state.z.size());
        return solver.solve(y, lam, &state);
    }
    return solver.solve(y, lam);
}

}  // namespace gfmr
