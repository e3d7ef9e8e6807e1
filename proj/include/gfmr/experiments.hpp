#pragma once

#include "gfmr/core_model.hpp"
#include "gfmr/gfmr.hpp"
#include "gfmr/graph.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gfmr {

enum class Setting { OneD1, OneD2, TwoD1, TwoD2 };

std::string to_string(Setting s);
Setting parse_setting(const std::string& name);  // "1d-1", "1d-2", "2d-1", "2d-2"

struct SimulatedData {
    Dataset data;
    Matrix gamma_star;  // p x M
};

// Noise standard deviation used when none is given: 2 for the 1-D settings
// (2 * N(0, 1)), sqrt(2) for the 2-D settings (N(0, 2) read as variance 2).
double default_noise_sd(Setting s);

// 1-D, t = 1..200, design [1, X1, X2, X3] with (X1, X2) categorical
// {(1,0): 1/4, (0,1): 1/4, (0,0): 1/2} and X3 ~ N(0, 1). The covariate-free
// Fourier terms form the intercept map; X3 has a zero map.
SimulatedData gen_1d_setting1(Index n, std::uint64_t seed, std::optional<double> noise_sd = std::nullopt);
// Piecewise-constant maps repeating with period 100, same design.
SimulatedData gen_1d_setting2(Index n, std::uint64_t seed, std::optional<double> noise_sd = std::nullopt);
// 40 x 40, design [X1, X2, X3] with X3 uniform on {56, ..., 75}; three
// large constant blocks (see setting_2d1_maps).
SimulatedData gen_2d_setting1(Index n, std::uint64_t seed, std::optional<double> noise_sd = std::nullopt);
// 40 x 40, design [1, X1, X2]; zero intercept map, X1 and X2 maps made of
// 1-, 4- and 25-pixel blocks with coefficients 2, 1.5, 1 (see setting_2d2_maps).
SimulatedData gen_2d_setting2(Index n, std::uint64_t seed, std::optional<double> noise_sd = std::nullopt);
SimulatedData generate(Setting s, Index n, std::uint64_t seed, std::optional<double> noise_sd = std::nullopt);

Matrix setting_1d1_maps();
Matrix setting_1d2_maps();
Matrix setting_2d1_maps();
Matrix setting_2d2_maps();

// Penalty graph of a setting: chain of 200, 40 x 40 grid; `periodic` adds
// the lag-100 edges to the 1-D chain.
IncidenceGraph setting_graph(Setting s, bool periodic = false);

// ||Gamma_hat - Gamma_star||_F / sqrt(M p)
double mean_deviation(const Matrix& gamma_hat, const Matrix& gamma_star);

enum class Method { Gfmr, GfmrPeriodic, TvOls, OlsTv, Ols };
std::string to_string(Method m);
Method parse_method(const std::string& name);  // gfmr, periodic, tv_ols, ols_tv, ols

struct SimSpec {
    Setting setting = Setting::OneD2;
    Index n = 25;
    int replicates = 1;
    std::uint64_t seed = 1;
    std::optional<double> noise_sd;
};

// Seed of replicate r: a SplitMix64 step from the base seed.
std::uint64_t replicate_seed(std::uint64_t base, int r);

// Lambda grid searched by cross-validation for a setting and method.
std::vector<double> default_lambda_grid(Setting s, Method m);

// Fits one method on a dataset; lam is ignored for OLS.
Matrix fit_method(Method method, const Dataset& data, const IncidenceGraph& g, double lam,
                  const SolverConfig& cfg);

// Cross-validated lambda (5 folds) on the given data for a method.
double select_lambda(Method method, const Dataset& data, const IncidenceGraph& g, const SolverConfig& cfg,
                     const std::vector<double>& grid, int folds = 5);

struct ReplicateSummary {
    Method method = Method::Gfmr;
    double lambda = 0.0;
    std::vector<double> deviations;  // per replicate, NaN where the fit failed
    std::vector<int> iterations;     // GFMR outer iterations (0 for other methods)
    std::vector<char> converged;
    int failures = 0;
    double mean = 0.0;
    double sd = 0.0;
    double seconds = 0.0;
};

// Runs spec.replicates independent datasets. Without an explicit lambda it
// is chosen by 5-fold CV on the first replicate and frozen for the rest.
// Replicates whose fit throws are counted in `failures` and left out of
// mean and sd.
ReplicateSummary run_replicates(const SimSpec& spec, Method method, const SolverConfig& cfg,
                                std::optional<double> lambda = std::nullopt, int threads = 1);

// "0.076(0.009)"
std::string format_mean_sd(double mean, double sd, int digits = 3);

// One row per method: setting,n,method,lambda,mean,sd,cell,failures.
void write_summary_csv(std::ostream& out, const SimSpec& spec, const std::vector<ReplicateSummary>& rows);

struct BootstrapBands {
    Matrix estimate;  // fit on the full data
    Matrix lower;
    Matrix upper;
    int draws = 0;
};

// Resamples subjects with replacement B times (redrawing rank-deficient
// resamples, at most 100 attempts each), refits and takes the entrywise
// (1 - level)/2 and (1 + level)/2 empirical quantiles (linear interpolation).
BootstrapBands bootstrap_ci(const Dataset& data, const IncidenceGraph& g, const SolverConfig& cfg, int B,
                            double level, std::uint64_t seed);

// Linear-interpolation quantile of an unsorted sample, q in [0, 1].
double empirical_quantile(std::vector<double> sample, double q);

}  // namespace gfmr
