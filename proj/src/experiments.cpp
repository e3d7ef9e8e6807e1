#include "gfmr/experiments.hpp"

#include "gfmr/baselines.hpp"
#include "gfmr/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace gfmr {

namespace {

constexpr Index kSeriesLength = 200;
constexpr Index kImageSide = 40;

// Row-major (row, col) pixel of the 40 x 40 image -> vec() index.
Index pixel(Index row, Index col) { return row + kImageSide * col; }

void fill_block(Matrix& maps, Index map, Index row0, Index col0, Index height, Index width, double value) {
    for (Index r = row0; r < row0 + height; ++r) {
        for (Index c = col0; c < col0 + width; ++c) maps(map, pixel(r, c)) = value;
    }
}

// (X1, X2) in {(1,0): 1/4, (0,1): 1/4, (0,0): 1/2}
std::pair<double, double> draw_categorical(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    if (u < 0.25) return {1.0, 0.0};
    if (u < 0.5) return {0.0, 1.0};
    return {0.0, 0.0};
}

Matrix add_noise(const Matrix& mean, double sd, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix Y = mean;
    for (Index i = 0; i < Y.rows(); ++i) {
        for (Index j = 0; j < Y.cols(); ++j) Y(i, j) += sd * normal(rng);
    }
    return Y;
}

SimulatedData assemble(Matrix X, Matrix gamma_star, std::vector<Index> dims, double sd, std::mt19937_64& rng) {
    SimulatedData out;
    out.data.shape = TensorShape(std::move(dims));
    out.data.Y = add_noise(X * gamma_star, sd, rng);
    out.data.X = std::move(X);
    out.gamma_star = std::move(gamma_star);
    return out;
}

Matrix design_1d(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix X(n, 4);
    for (Index i = 0; i < n; ++i) {
        const auto [x1, x2] = draw_categorical(rng);
        X(i, 0) = 1.0;
        X(i, 1) = x1;
        X(i, 2) = x2;
        X(i, 3) = normal(rng);
    }
    return X;
}

double indicator(Index j, Index lo, Index hi) { return (j >= lo && j <= hi) ? 1.0 : 0.0; }

}  // namespace

std::string to_string(Setting s) {
    switch (s) {
        case Setting::OneD1: return "1d-1";
        case Setting::OneD2: return "1d-2";
        case Setting::TwoD1: return "2d-1";
        case Setting::TwoD2: return "2d-2";
    }
    return "?";
}

Setting parse_setting(const std::string& name) {
    if (name == "1d-1") return Setting::OneD1;
    if (name == "1d-2") return Setting::OneD2;
    if (name == "2d-1") return Setting::TwoD1;
    if (name == "2d-2") return Setting::TwoD2;
    throw std::invalid_argument("unknown setting '" + name + "' (expected 1d-1, 1d-2, 2d-1 or 2d-2)");
}

double default_noise_sd(Setting s) {
    return (s == Setting::OneD1 || s == Setting::OneD2) ? 2.0 : std::sqrt(2.0);
}

Matrix setting_1d1_maps() {
    using std::numbers::pi;
    Matrix G = Matrix::Zero(4, kSeriesLength);
    for (Index j = 0; j < kSeriesLength; ++j) {
        const double t = static_cast<double>(j + 1);
        G(0, j) = 0.3 * std::sin(pi * t / 100.0) + 0.5 * std::cos(pi * t / 25.0);
        G(1, j) = 0.5 * std::cos(pi * t / 100.0);
        G(2, j) = -0.3 * std::sin(pi * t / 50.0);
    }
    return G;
}

Matrix setting_1d2_maps() {
    Matrix G = Matrix::Zero(4, kSeriesLength);
    for (Index j = 0; j < kSeriesLength; ++j) {
        const Index t = j + 1;  // windows are 1-based
        G(0, j) = indicator(t, 1, 20) + indicator(t, 101, 120);
        G(1, j) = 0.5 * (indicator(t, 31, 70) + indicator(t, 131, 170));
        G(2, j) = -(indicator(t, 71, 80) + indicator(t, 171, 180));
        G(3, j) = indicator(t, 61, 100) + indicator(t, 161, 200);
    }
    return G;
}

// Rows/cols are 0-based pixel coordinates of the 40 x 40 image.
//   X1: 15 x 15 block at rows 5-19, cols 5-19, value 1
//   X2: 15 x 15 block at rows 20-34, cols 20-34, value 1
//   X3: 14 x 14 block at rows 22-35, cols 4-17, value 0.02 (X3 is about 65)
Matrix setting_2d1_maps() {
    Matrix G = Matrix::Zero(3, kImageSide * kImageSide);
    fill_block(G, 0, 5, 5, 15, 15, 1.0);
    fill_block(G, 1, 20, 20, 15, 15, 1.0);
    fill_block(G, 2, 22, 4, 14, 14, 0.02);
    return G;
}

// The image is cut into six 13 x 20 cells with origins (r0, c0),
// r0 in {0, 13, 26} and c0 in {0, 20}. Each cell holds one triple:
//   1 pixel   at (r0+2, c0+2)                          value 2
//   2 x 2     at rows r0+2..r0+3, cols c0+8..c0+9     value 1.5
//   5 x 5     at rows r0+6..r0+10, cols c0+12..c0+16  value 1
// X1 uses this layout and X2 its transpose. The intercept map is zero.
Matrix setting_2d2_maps() {
    Matrix G = Matrix::Zero(3, kImageSide * kImageSide);
    for (Index r0 : {Index{0}, Index{13}, Index{26}}) {
        for (Index c0 : {Index{0}, Index{20}}) {
            fill_block(G, 1, r0 + 2, c0 + 2, 1, 1, 2.0);
            fill_block(G, 1, r0 + 2, c0 + 8, 2, 2, 1.5);
            fill_block(G, 1, r0 + 6, c0 + 12, 5, 5, 1.0);
            fill_block(G, 2, c0 + 2, r0 + 2, 1, 1, 2.0);
            fill_block(G, 2, c0 + 8, r0 + 2, 2, 2, 1.5);
            fill_block(G, 2, c0 + 12, r0 + 6, 5, 5, 1.0);
        }
    }
    return G;
}

SimulatedData gen_1d_setting1(Index n, std::uint64_t seed, std::optional<double> noise_sd) {
    if (n < 4) throw std::invalid_argument("1-D settings need n >= 4");
    std::mt19937_64 rng(seed);
    Matrix X = design_1d(n, rng);
    return assemble(std::move(X), setting_1d1_maps(), {kSeriesLength},
                    noise_sd.value_or(default_noise_sd(Setting::OneD1)), rng);
}

SimulatedData gen_1d_setting2(Index n, std::uint64_t seed, std::optional<double> noise_sd) {
    if (n < 4) throw std::invalid_argument("1-D settings need n >= 4");
    std::mt19937_64 rng(seed);
    Matrix X = design_1d(n, rng);
    return assemble(std::move(X), setting_1d2_maps(), {kSeriesLength},
                    noise_sd.value_or(default_noise_sd(Setting::OneD2)), rng);
}

SimulatedData gen_2d_setting1(Index n, std::uint64_t seed, std::optional<double> noise_sd) {
    if (n < 3) throw std::invalid_argument("2-D setting 1 needs n >= 3");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> age(56, 75);
    Matrix X(n, 3);
    for (Index i = 0; i < n; ++i) {
        const auto [x1, x2] = draw_categorical(rng);
        X(i, 0) = x1;
        X(i, 1) = x2;
        X(i, 2) = age(rng);
    }
    return assemble(std::move(X), setting_2d1_maps(), {kImageSide, kImageSide},
                    noise_sd.value_or(default_noise_sd(Setting::TwoD1)), rng);
}

SimulatedData gen_2d_setting2(Index n, std::uint64_t seed, std::optional<double> noise_sd) {
    if (n < 3) throw std::invalid_argument("2-D setting 2 needs n >= 3");
    std::mt19937_64 rng(seed);
    Matrix X(n, 3);
    for (Index i = 0; i < n; ++i) {
        const auto [x1, x2] = draw_categorical(rng);
        X(i, 0) = 1.0;
        X(i, 1) = x1;
        X(i, 2) = x2;
    }
    return assemble(std::move(X), setting_2d2_maps(), {kImageSide, kImageSide},
                    noise_sd.value_or(default_noise_sd(Setting::TwoD2)), rng);
}

SimulatedData generate(Setting s, Index n, std::uint64_t seed, std::optional<double> noise_sd) {
    switch (s) {
        case Setting::OneD1: return gen_1d_setting1(n, seed, noise_sd);
        case Setting::OneD2: return gen_1d_setting2(n, seed, noise_sd);
        case Setting::TwoD1: return gen_2d_setting1(n, seed, noise_sd);
        case Setting::TwoD2: return gen_2d_setting2(n, seed, noise_sd);
    }
    throw std::invalid_argument("unknown setting");
}

IncidenceGraph setting_graph(Setting s, bool periodic) {
    if (s == Setting::OneD1 || s == Setting::OneD2) {
        IncidenceGraph chain = grid_graph({kSeriesLength});
        return periodic ? add_lag_edges(chain, 100, 100) : chain;
    }
    if (periodic) throw std::invalid_argument("periodic edges are defined for the 1-D settings only");
    return grid_graph({kImageSide, kImageSide});
}

double mean_deviation(const Matrix& gamma_hat, const Matrix& gamma_star) {
    if (gamma_hat.rows() != gamma_star.rows() || gamma_hat.cols() != gamma_star.cols()) {
        throw ShapeError("coefficient matrices differ in shape");
    }
    return (gamma_hat - gamma_star).norm() / std::sqrt(static_cast<double>(gamma_hat.size()));
}

std::string to_string(Method m) {
    switch (m) {
        case Method::Gfmr: return "gfmr";
        case Method::GfmrPeriodic: return "periodic";
        case Method::TvOls: return "tv_ols";
        case Method::OlsTv: return "ols_tv";
        case Method::Ols: return "ols";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    if (name == "gfmr") return Method::Gfmr;
    if (name == "periodic" || name == "periodic_gfmr") return Method::GfmrPeriodic;
    if (name == "tv_ols") return Method::TvOls;
    if (name == "ols_tv") return Method::OlsTv;
    if (name == "ols") return Method::Ols;
    throw std::invalid_argument("unknown method '" + name + "' (expected gfmr, periodic, tv_ols, ols_tv or ols)");
}

std::uint64_t replicate_seed(std::uint64_t base, int r) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(r + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<double> default_lambda_grid(Setting s, Method m) {
    if (m == Method::Ols) return {0.0};
    if (s == Setting::OneD1 || s == Setting::OneD2) return {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
    return {0.125, 0.25, 0.5, 1.0, 2.0};
}

Matrix fit_method(Method method, const Dataset& data, const IncidenceGraph& g, double lam, const SolverConfig& cfg) {
    switch (method) {
        case Method::Gfmr:
        case Method::GfmrPeriodic: {
            SolverConfig c = cfg;
            c.lam = lam;
            return fit(data, g, c).Gamma;
        }
        case Method::TvOls: return tv_ols_fit(data, g, lam, cfg.gfl, cfg.threads);
        case Method::OlsTv: return ols_tv_fit(data, g, lam, cfg.gfl, cfg.threads);
        case Method::Ols: return ols_fit(data).Gamma;
    }
    throw std::invalid_argument("unknown method");
}

double select_lambda(Method method, const Dataset& data, const IncidenceGraph& g, const SolverConfig& cfg,
                     const std::vector<double>& grid, int folds) {
    if (method == Method::Ols) return 0.0;
    const CvResult cv = cross_validate(data, grid, folds, cfg.seed, [&](const Dataset& train, double lam) {
        return fit_method(method, train, g, lam, cfg);
    });
    return cv.best_lambda;
}

ReplicateSummary run_replicates(const SimSpec& spec, Method method, const SolverConfig& cfg,
                                std::optional<double> lambda, int threads) {
    if (spec.replicates < 1) throw std::invalid_argument("need at least one replicate");
    const auto start = std::chrono::steady_clock::now();
    const IncidenceGraph g = setting_graph(spec.setting, method == Method::GfmrPeriodic);

    ReplicateSummary out;
    out.method = method;
    if (lambda) {
        out.lambda = *lambda;
    } else {
        const SimulatedData first = generate(spec.setting, spec.n, replicate_seed(spec.seed, 0), spec.noise_sd);
        SolverConfig c = cfg;
        c.seed = replicate_seed(spec.seed, 0);
        out.lambda = select_lambda(method, first.data, g, c, default_lambda_grid(spec.setting, method));
    }

    const auto R = static_cast<std::size_t>(spec.replicates);
    std::vector<double> dev(R, 0.0);
    std::vector<int> iters(R, 0);
    std::vector<char> conv(R, 1);
    std::vector<char> failed(R, 0);
    parallel_for(spec.replicates, threads, [&](Index r) {
        const std::uint64_t seed = replicate_seed(spec.seed, static_cast<int>(r));
        try {
            const SimulatedData sim = generate(spec.setting, spec.n, seed, spec.noise_sd);
            SolverConfig c = cfg;
            c.seed = seed;
            if (method == Method::Gfmr || method == Method::GfmrPeriodic) {
                c.lam = out.lambda;
                const FitResult res = fit(sim.data, g, c);
                dev[r] = mean_deviation(res.Gamma, sim.gamma_star);
                iters[r] = res.iterations;
                conv[r] = res.converged;
            } else {
                dev[r] = mean_deviation(fit_method(method, sim.data, g, out.lambda, c), sim.gamma_star);
            }
        } catch (const std::exception& e) {
            failed[r] = 1;
            std::cerr << "replicate " << r << " (" << to_string(method) << ") failed: " << e.what() << '\n';
        }
    });
    out.deviations.assign(R, std::numeric_limits<double>::quiet_NaN());
    double sum = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
        if (failed[r]) {
            ++out.failures;
            continue;
        }
        out.deviations[r] = dev[r];
        sum += dev[r];
    }
    out.iterations = iters;
    out.converged = conv;
    const double count = static_cast<double>(R) - out.failures;
    if (count > 0) {
        out.mean = sum / count;
        double ss = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
            if (!failed[r]) ss += (dev[r] - out.mean) * (dev[r] - out.mean);
        }
        out.sd = count > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::string format_mean_sd(double mean, double sd, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << mean << '(' << sd << ')';
    return os.str();
}

void write_summary_csv(std::ostream& out, const SimSpec& spec, const std::vector<ReplicateSummary>& rows) {
    out << "setting,n,method,lambda,mean,sd,cell,replicates,failures\n";
    for (const auto& row : rows) {
        out << to_string(spec.setting) << ',' << spec.n << ',' << to_string(row.method) << ','
            << std::setprecision(17) << row.lambda << ',' << row.mean << ',' << row.sd << ','
            << format_mean_sd(row.mean, row.sd) << ',' << row.deviations.size() - row.failures << ',' << row.failures
            << '\n';
    }
}

double empirical_quantile(std::vector<double> sample, double q) {
    if (sample.empty()) throw std::invalid_argument("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
    std::sort(sample.begin(), sample.end());
    const double pos = q * static_cast<double>(sample.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sample.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sample[lo] + frac * (sample[hi] - sample[lo]);
}

BootstrapBands bootstrap_ci(const Dataset& data, const IncidenceGraph& g, const SolverConfig& cfg, int B,
                            double level, std::uint64_t seed) {
    if (B < 10) throw std::invalid_argument("bootstrap needs at least 10 draws");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("coverage level must lie in (0, 1)");
    data.validate();
    BootstrapBands bands;
    bands.estimate = fit(data, g, cfg).Gamma;

    const Index n = data.n();
    const Index p = data.p();
    const Index M = data.M();
    std::vector<Matrix> draws(static_cast<std::size_t>(B));
    SolverConfig inner = cfg;
    inner.threads = 1;
    parallel_for(B, cfg.threads, [&](Index b) {
        std::mt19937_64 rng(replicate_seed(seed, static_cast<int>(b)));
        std::uniform_int_distribution<Index> pick(0, n - 1);
        for (int attempt = 0; attempt < 100; ++attempt) {
            std::vector<Index> rows(static_cast<std::size_t>(n));
            for (auto& r : rows) r = pick(rng);
            Dataset resampled = subset_subjects(data, rows);
            try {
                draws[b] = fit(resampled, g, inner).Gamma;
                return;
            } catch (const RankDeficientError&) {
            }
        }
        throw RankDeficientError("bootstrap resamples stayed rank deficient after 100 attempts");
    });

    bands.draws = B;
    bands.lower.resize(p, M);
    bands.upper.resize(p, M);
    std::vector<double> sample(static_cast<std::size_t>(B));
    const double lo_q = (1.0 - level) / 2.0;
    const double hi_q = 1.0 - lo_q;
    for (Index k = 0; k < p; ++k) {
        for (Index j = 0; j < M; ++j) {
            for (int b = 0; b < B; ++b) sample[b] = draws[b](k, j);
            bands.lower(k, j) = empirical_quantile(sample, lo_q);
            bands.upper(k, j) = empirical_quantile(sample, hi_q);
        }
    }
    return bands;
}

}  // namespace gfmr
