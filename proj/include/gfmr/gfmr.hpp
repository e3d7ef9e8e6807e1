#pragma once

#include "gfmr/core_model.hpp"
#include "gfmr/fused_lasso.hpp"
#include "gfmr/graph.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace gfmr {

struct SolverConfig {
    double lam = 0.0;            // TV strength
    double admm_penalty = 10.0;   // augmented-Lagrangian penalty of the outer ADMM
    double tol = 1e-4;
    int max_iter = 200;
    GflConfig gfl;
    std::uint64_t seed = 0;      // random initial theta, eta, mu
    int threads = 1;
    Index batch_size = 0;        // subjects per mu-update batch; 0 = one batch

    void validate() const;
};

// Iterates of the three-block ADMM in scaled form. All vectors have length
// n*M in subject-major order.
struct AdmmState {
    Vector theta;
    Vector eta;
    Vector mu;
    Vector U;
    Vector V;
    int k = 0;

    // theta, eta, mu i.i.d. N(0, 1) from `seed`; U = V = 0.
    static AdmmState random(Index length, std::uint64_t seed);
};

// theta <- (y + rho (eta - U + mu - V)) / (2 rho + 1)
Vector theta_update(const AdmmState& state, const Vector& y, const SolverConfig& cfg);

// eta <- P (theta + U)
Vector eta_update(const AdmmState& state, const ProjectionOperator& op);

// Per-subject graph-fused lasso of theta + V with penalty lam / rho. Holds a
// warm-start iterate for every subject; subjects are processed in batches
// and each batch may be spread over threads. Results do not depend on the
// batch layout because subjects never share state.
class MuUpdater {
public:
    MuUpdater(const IncidenceGraph& g, Index num_subjects, const GflConfig& cfg);

    Vector update(const Vector& target, double lam, const std::vector<std::vector<Index>>& batches,
                  int threads);
    // Every subject in [0, n) once, in contiguous batches of `batch_size` (0 = all).
    Vector update(const Vector& target, double lam, Index batch_size = 0, int threads = 1);

    // Stopping tolerance of the following updates; unset means inner_tol.
    void set_tolerance(std::optional<double> tol) { tol_ = tol; }

    // False if any subproblem hit inner_max_iter in the last update.
    bool last_converged() const { return last_converged_; }
    int last_max_inner_iterations() const { return last_max_iterations_; }
    const GflSolver& solver() const { return solver_; }

private:
    GflSolver solver_;
    std::vector<GflState> states_;
    std::optional<double> tol_;
    bool last_converged_ = true;
    int last_max_iterations_ = 0;
};

std::vector<std::vector<Index>> contiguous_batches(Index n, Index batch_size);

// Cold-start mu update: mu_i = GFL(theta_i + V_i, lam / rho) for every subject.
Vector mu_update(const AdmmState& state, const IncidenceGraph& g, const SolverConfig& cfg);

// max(relative theta change, ||theta_new - P theta_new|| / (1 + ||theta_new||)) < tol.
// Falls back to the absolute change when theta_old is zero.
bool convergence_check(const Vector& theta_new, const Vector& theta_old, const ProjectionOperator& op,
                       double tol);
// The two quantities compared against tol, in that order.
IterationRecord convergence_measures(const Vector& theta_new, const Vector& theta_old,
                                     const ProjectionOperator& op);

// 1/2 ||Y - X Gamma||_F^2 + lam sum_i ||(X Gamma)_i D||_1
double gfmr_objective(const Dataset& data, const IncidenceGraph& g, const Matrix& Gamma, double lam);

// Solves min_Gamma 1/2 ||Y - X Gamma||^2 + lam ||X Gamma D||_1 through its
// constrained form in theta = vec((X Gamma)^T) with the ADMM splitting
// theta = eta (eta feasible), theta = mu (mu carries the TV penalty).
// Throws RankDeficientError / ShapeError; non-convergence is reported in
// the result.
FitResult fit(const Dataset& data, const IncidenceGraph& g, const SolverConfig& cfg);

// Stationarity residual of the constrained problem at result.theta:
//   min_z || P (theta - y) + lam P D_v z ||
// with z_e = sign((D_v^T theta)_e) where |(D_v^T theta)_e| > activity_tol and
// z_e in [-1, 1] elsewhere, solved by cyclic coordinate descent. Zero iff
// theta satisfies the first-order optimality conditions. Dense in n; meant
// for small problems. Default activity_tol is 1e-6 * max(1, ||theta||_inf).
double kkt_certificate(const FitResult& result, const Dataset& data, const IncidenceGraph& g, double lam,
                       std::optional<double> activity_tol = std::nullopt);

// K-fold cross-validation over subjects. `fitter` maps a training set and a
// lambda to a p x M coefficient matrix; the score is the held-out
// ||Y - X Gamma||_F^2 summed over folds. Folds whose training design is
// rank deficient are skipped.
struct CvResult {
    std::vector<double> lambdas;
    std::vector<double> scores;
    double best_lambda = 0.0;
    int folds_used = 0;
};
using CoefficientFitter = std::function<Matrix(const Dataset&, double)>;
CvResult cross_validate(const Dataset& data, const std::vector<double>& lambdas, int folds, std::uint64_t seed,
                        const CoefficientFitter& fitter);
CvResult cross_validate_gfmr(const Dataset& data, const IncidenceGraph& g, const SolverConfig& cfg,
                             const std::vector<double>& lambdas, int folds = 5);

Dataset subset_subjects(const Dataset& data, const std::vector<Index>& rows);

}  // namespace gfmr
