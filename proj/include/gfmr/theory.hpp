#pragma once

#include "gfmr/gfmr.hpp"
#include "gfmr/graph.hpp"
#include "gfmr/types.hpp"

#include <cstdint>
#include <vector>

namespace gfmr {

// rho(D): largest column norm of (D^T)^+ = L^+ D, L the graph Laplacian.
// Dense eigendecomposition of L, so num_nodes is capped at max_nodes.
double inverse_scaling_factor(const IncidenceGraph& g, Index max_nodes = 2000);

struct CompatibilityEstimate {
    double kappa = 0.0;     // sqrt(|T|) / sup
    double sup = 0.0;       // sup over unit theta of ||(D^T theta)_T||_1
    bool exact = false;     // sup found by enumerating sign patterns
    bool infinite = false;  // (D^T theta)_T vanishes identically
};

// kappa_T = inf over nonzero theta in R^M of sqrt(|T|) ||theta|| / ||(D^T theta)_T||_1.
// sup_theta ||(D^T theta)_T||_1 = max over s in {-1,1}^T of ||D_T s||; the
// maximum is enumerated when |T| <= exact_limit, otherwise estimated from
// `starts` random sign patterns refined by the ascent s <- sign(D_T^T D_T s).
// The estimate is a lower bound on sup, so kappa is then an upper estimate.
CompatibilityEstimate compatibility_factor(const IncidenceGraph& g, const std::vector<Index>& T,
                                           int exact_limit = 20, int starts = 50, std::uint64_t seed = 0);

// 1 / (2 min(sqrt(d), sqrt(|T|))), the degree lower bound on kappa_T.
double compatibility_lower_bound(Index max_degree, Index set_size);

// Edges whose endpoints differ in any row of theta (n x M, one row per subject).
std::vector<Index> jump_edges(const IncidenceGraph& g, const Matrix& theta_rows, double tol = 1e-12);

// Oracle-inequality inputs. T is a set of base-graph edges applied to every
// subject, so the extended set has n |T| edges; kappa of the extended
// incidence equals kappa_T of the base graph.
struct OracleBoundSpec {
    double sigma = 1.0;
    double delta = 0.1;
    std::vector<Index> T;
    Index n = 1;
    Index num_nodes = 0;  // M
    Index num_edges = 0;  // m
    double inverse_scaling = 0.0;
    double compatibility = 0.0;

    void validate() const;
    // rho sigma sqrt(log(m n M / delta))
    double lambda() const;
};

// Fills M, m, rho(D) and kappa_T from the graph.
OracleBoundSpec make_oracle_spec(const IncidenceGraph& g, Index n, double sigma, double delta,
                                 std::vector<Index> T);

// ||theta_bar - theta_star||^2 + 4 lam ||(D_v^T theta_bar)_{T^c}||_1
//   + 64 sigma^2 log(2 e n M / delta) + 8 rho^2 sigma^2 log(m n M / delta) |T_v| / kappa^2
double oracle_bound_rhs(const OracleBoundSpec& spec, const IncidenceGraph& g, const Vector& theta_bar,
                        const Vector& theta_star);
// Same with the kappa term replaced by 2 rho^2 sigma^2 log(m n M / delta) |T_v| / min(d, |T_v|).
double degree_bound_rhs(const OracleBoundSpec& spec, const IncidenceGraph& g, const Vector& theta_bar,
                        const Vector& theta_star);

struct OracleCheckResult {
    int replicates = 0;
    int violations = 0;
    int nonconverged = 0;  // excluded from the rate
    double violation_rate = 0.0;
    double bound = 0.0;    // right-hand side at theta_bar = theta_star
    double lambda = 0.0;   // penalty of the bound; the fits use lambda / 2
    double slack = 0.0;    // tol (1 + ||theta*||^2) added to the bound for solver error
    std::vector<double> errors;  // ||theta_star - theta_hat||^2 per converged replicate
};

// Monte Carlo check: Y = X Gamma* + sigma noise, fit at the bound's penalty,
// count replicates with ||theta* - theta_hat||^2 above the bound. T is the set
// of jump edges of theta*.
OracleCheckResult oracle_check(const IncidenceGraph& g, const Matrix& X, const Matrix& gamma_star, double sigma,
                               double delta, int replicates, std::uint64_t seed, const SolverConfig& cfg,
                               int threads = 1);

}  // namespace gfmr
