#pragma once

#include "gfmr/graph.hpp"
#include "gfmr/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace gfmr {

// Exact minimizer of 1/2 sum_i w_i (y_i - b_i)^2 + lam sum_i |b_{i+1} - b_i|
// by Johnson's linear-time dynamic program over the piecewise-linear
// derivative of the forward messages. Empty weights mean unit weights.
// Throws std::invalid_argument on lam < 0, non-positive weights or NaN input.
Vector fl1d_solve(const Vector& y, const Vector& node_weights, double lam);
Vector fl1d_solve(const Vector& y, double lam);

// Scratch buffers so repeated solves do not allocate.
class Fl1dWorkspace {
public:
    void solve(std::span<const double> y, std::span<const double> weights, double lam, std::span<double> out);

private:
    std::vector<double> x_, a_, b_, lower_, upper_;
};

struct GflConfig {
    double inner_penalty = 1.0;  // consensus ADMM step
    double inner_tol = 1e-6;
    double relaxation = 1.6;  // over-relaxation of the consensus step, in (0, 2)
    int inner_max_iter = 5000;
    bool warm_start = true;
    bool record_objective = false;

    void validate() const;
};

// Iterate carried between solves of the same graph (replicas are the
// trail positions; see GflSolver).
struct GflState {
    Vector mu;
    Vector z;
    Vector u;
};

struct GflResult {
    Vector mu;
    int iterations = 0;
    bool converged = false;
    // Objective of the returned iterate after each sweep (record_objective).
    // The lowest-objective replica average seen so far is the one returned,
    // so this sequence never increases.
    std::vector<double> objective;
};

// Graph-fused lasso  min_mu 1/2 ||y - mu||^2 + lam ||D^T mu||_1.
//
// Every node is replicated once per visit of the trail decomposition. Each
// trail is a 1-D fused lasso solved exactly by the dynamic program; a
// consensus ADMM couples the replicas:
//   mu_i <- (y_i + a sum_{visits p of i} (z_p - u_p)) / (1 + a c_i)
//   z_t  <- fl1d(mu_t + u_t, lam / a)     for every trail t
//   u    <- u + S mu - z
// with the node values over-relaxed by `relaxation` before the trail solves.
// Stops when primal + dual residual <= inner_tol * max(1, ||y||). ADMM
// iterates are not monotone in the objective; the node average with the
// lowest objective seen is the one returned.
// When no node is visited twice (chains, disjoint paths) the trail solves
// are already exact and the consensus loop is skipped.
class GflSolver {
public:
    GflSolver(const IncidenceGraph& g, GflConfig cfg = {});

    const IncidenceGraph& graph() const { return graph_; }
    const TrailDecomposition& trails() const { return trails_; }
    const GflConfig& config() const { return cfg_; }
    bool exact() const { return exact_; }

    // `state`, when given, seeds the iterate (if warm_start and sizes match)
    // and receives the final iterate. `tol` overrides inner_tol.
    GflResult solve(const Vector& y, double lam, GflState* state = nullptr,
                    std::optional<double> tol = std::nullopt) const;

private:
    IncidenceGraph graph_;
    GflConfig cfg_;
    TrailDecomposition trails_;
    std::vector<Index> position_node_;
    std::vector<Index> trail_start_;  // size trails + 1
    Vector visits_;
    bool exact_ = true;
};

// One-shot convenience wrapper around GflSolver.
GflResult gfl_solve(const IncidenceGraph& g, const Vector& y, double lam, const GflConfig& cfg = {},
                    const std::optional<Vector>& warm = std::nullopt);

double gfl_objective(const IncidenceGraph& g, const Vector& y, const Vector& mu, double lam);

}  // namespace gfmr
