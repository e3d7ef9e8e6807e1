#include "gfmr/cli.hpp"

#include "gfmr/baselines.hpp"
#include "gfmr/experiments.hpp"
#include "gfmr/gfmr.hpp"
#include "gfmr/graph.hpp"
#include "gfmr/io.hpp"
#include "gfmr/theory.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace gfmr {

namespace {

namespace fs = std::filesystem;

int default_threads() {
    if (const char* env = std::getenv("GFMR_THREADS")) {
        try {
            const int t = std::stoi(env);
            if (t >= 1) return t;
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring GFMR_THREADS='" << env << "'\n";
    }
    return 1;
}

struct Common {
    std::string out_dir = ".";
    std::string config;
    std::uint64_t seed = 0;
    int threads = default_threads();
};

struct SolverFlags {
    double lambda = 0.0;
    double rho = 0.0;
    double tol = 0.0;
    int max_iter = 0;
    CLI::Option* lambda_opt = nullptr;
    CLI::Option* rho_opt = nullptr;
    CLI::Option* tol_opt = nullptr;
    CLI::Option* max_iter_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
};

struct InputFlags {
    std::string design;
    std::string outcome;
    std::string dims;
    std::string graph;
};

void add_common(CLI::App* app, Common& c, SolverFlags& s) {
    app->add_option("--out-dir", c.out_dir, "Directory for output files")->capture_default_str();
    app->add_option("--config", c.config, "key=value file of solver settings (flags override it)");
    s.seed_opt = app->add_option("--seed", c.seed, "Random seed");
    s.threads_opt = app->add_option("--threads", c.threads, "Worker threads (default: GFMR_THREADS or 1)");
}

void add_solver(CLI::App* app, SolverFlags& s) {
    s.lambda_opt = app->add_option("--lambda", s.lambda, "TV penalty");
    s.rho_opt = app->add_option("--rho", s.rho, "ADMM penalty");
    s.tol_opt = app->add_option("--tol", s.tol, "Outer tolerance");
    s.max_iter_opt = app->add_option("--max-iter", s.max_iter, "Outer iteration cap");
}

void add_graph_inputs(CLI::App* app, InputFlags& in) {
    app->add_option("--dims", in.dims, "Outcome tensor dims, e.g. 40,40 (default: <outcome>.dims)");
    app->add_option("--graph", in.graph, "Edge-list file (default: grid graph of the dims)");
}

SolverConfig resolve_config(const Common& c, const SolverFlags& s) {
    SolverConfig cfg;
    if (!c.config.empty()) cfg = apply_config(read_key_values(c.config), cfg);
    if (s.lambda_opt && s.lambda_opt->count()) cfg.lam = s.lambda;
    if (s.rho_opt && s.rho_opt->count()) cfg.admm_penalty = s.rho;
    if (s.tol_opt && s.tol_opt->count()) cfg.tol = s.tol;
    if (s.max_iter_opt && s.max_iter_opt->count()) cfg.max_iter = s.max_iter;
    if (s.seed_opt->count()) cfg.seed = c.seed;
    if (s.threads_opt->count()) cfg.threads = c.threads;
    else if (c.config.empty() || !read_key_values(c.config).count("threads")) cfg.threads = default_threads();
    cfg.validate();
    return cfg;
}

std::vector<Index> resolve_dims(const InputFlags& in, Index M) {
    std::vector<Index> dims;
    if (!in.dims.empty()) {
        dims = parse_dims(in.dims);
    } else if (auto side = read_dims_sidecar(in.outcome)) {
        dims = *side;
    } else {
        dims = {M};
    }
    if (TensorShape(dims).size() != M) {
        throw ShapeError("dims " + format_dims(dims) + " do not match the " + std::to_string(M) + " outcome columns");
    }
    return dims;
}

IncidenceGraph resolve_graph(const InputFlags& in, const std::vector<Index>& dims) {
    const Index M = TensorShape(dims).size();
    IncidenceGraph g = in.graph.empty() ? grid_graph(dims) : read_edge_list(in.graph, M);
    if (g.num_nodes() != M) {
        throw ShapeError("graph has " + std::to_string(g.num_nodes()) + " nodes, outcomes have " +
                         std::to_string(M));
    }
    return g;
}

Dataset load_dataset(const InputFlags& in) {
    Dataset data;
    data.X = read_csv_matrix(in.design);
    data.Y = read_csv_matrix(in.outcome);
    data.shape = TensorShape(resolve_dims(in, data.Y.cols()));
    data.validate();
    return data;
}

fs::path prepare_out_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    return p;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void record_inputs(Manifest& m, const std::string& command, const InputFlags& in, const std::vector<Index>& dims) {
    m.set("command", command);
    if (!in.design.empty()) m.set("design", fs::absolute(in.design).string());
    if (!in.outcome.empty()) m.set("outcome", fs::absolute(in.outcome).string());
    m.set("dims", format_dims(dims));
    m.set("graph", in.graph.empty() ? std::string("grid") : fs::absolute(in.graph).string());
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int cmd_fit(const Common& c, const SolverFlags& s, const InputFlags& in) {
    const auto t0 = std::chrono::steady_clock::now();
    const SolverConfig cfg = resolve_config(c, s);
    const Dataset data = load_dataset(in);
    const IncidenceGraph g = resolve_graph(in, data.shape.dims());
    const FitResult res = fit(data, g, cfg);

    const fs::path dir = prepare_out_dir(c.out_dir);
    write_csv_matrix((dir / "gamma.csv").string(), res.Gamma);
    write_csv_matrix((dir / "theta.csv").string(), unstack_subjects(res.theta, data.n(), data.M()));
    {
        std::ofstream out(dir / "diagnostics.csv");
        if (!out) throw IoError("cannot write diagnostics.csv");
        out << "iteration,rel_change,feasibility,objective\n";
        for (std::size_t k = 0; k < res.diagnostics.size(); ++k) {
            const auto& d = res.diagnostics[k];
            out << k + 1 << ',' << format_double(d.rel_change) << ',' << format_double(d.feasibility) << ','
                << format_double(d.objective) << '\n';
        }
    }
    Manifest m;
    record_inputs(m, "fit", in, data.shape.dims());
    m.merge(config_entries(cfg));
    m.set("iterations", static_cast<long long>(res.iterations));
    m.set("converged", res.converged);
    m.set("inner_converged", res.inner_converged);
    m.set("seconds", seconds_since(t0));
    m.write((dir / "manifest.txt").string());

    std::cout << "iterations=" << res.iterations << " converged=" << (res.converged ? "true" : "false") << '\n';
    if (!res.converged) {
        std::cerr << "gfmr: no convergence within " << cfg.max_iter << " iterations (outputs written)\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

int cmd_denoise(const Common& c, const SolverFlags& s, const InputFlags& in) {
    const SolverConfig cfg = resolve_config(c, s);
    const Matrix Y = read_csv_matrix(in.outcome);
    const auto dims = resolve_dims(in, Y.cols());
    const IncidenceGraph g = resolve_graph(in, dims);
    Matrix out(Y.rows(), Y.cols());
    bool ok = true;
    GflSolver solver(g, cfg.gfl);
    for (Index i = 0; i < Y.rows(); ++i) {
        const GflResult r = solver.solve(Y.row(i).transpose(), cfg.lam);
        out.row(i) = r.mu.transpose();
        ok = ok && r.converged;
    }
    const fs::path dir = prepare_out_dir(c.out_dir);
    write_csv_matrix((dir / "denoised.csv").string(), out);
    Manifest m;
    record_inputs(m, "denoise", in, dims);
    m.merge(config_entries(cfg));
    m.set("converged", ok);
    m.write((dir / "manifest.txt").string());
    return ok ? kExitOk : kExitNotConverged;
}

struct GraphFlags {
    std::string dims;
    std::string input;
    Index lag = 0;
    Index count = 0;
    std::string out;
};

int cmd_graph(const GraphFlags& f) {
    if (f.dims.empty() == f.input.empty()) throw std::invalid_argument("give exactly one of --dims or --input");
    IncidenceGraph g = f.input.empty() ? grid_graph(parse_dims(f.dims)) : read_edge_list(f.input);
    if (f.lag > 0 || f.count > 0) g = add_lag_edges(g, f.lag, f.count);
    if (f.out.empty() || f.out == "-") {
        write_edge_list(std::cout, g);
    } else {
        write_edge_list(f.out, g);
    }
    std::cerr << "nodes=" << g.num_nodes() << " edges=" << g.num_edges() << '\n';
    return kExitOk;
}

struct SimulateFlags {
    std::string setting = "1d-2";
    Index n = 25;
    std::string methods = "gfmr";
    int replicates = 1;
    std::optional<double> noise_sd;
    bool write_data = false;
};

int cmd_simulate(const Common& c, const SolverFlags& s, const SimulateFlags& f) {
    const auto t0 = std::chrono::steady_clock::now();
    const SolverConfig cfg = resolve_config(c, s);
    SimSpec spec;
    spec.setting = parse_setting(f.setting);
    spec.n = f.n;
    spec.replicates = f.replicates;
    spec.seed = s.seed_opt->count() ? c.seed : 1;
    spec.noise_sd = f.noise_sd;
    std::optional<double> lambda;
    if (s.lambda_opt->count()) lambda = s.lambda;

    std::vector<ReplicateSummary> rows;
    for (const auto& name : split_list(f.methods)) {
        rows.push_back(run_replicates(spec, parse_method(name), cfg, lambda, cfg.threads));
    }
    if (rows.empty()) throw std::invalid_argument("no methods given");

    const fs::path dir = prepare_out_dir(c.out_dir);
    {
        std::ofstream out(dir / "summary.csv");
        if (!out) throw IoError("cannot write summary.csv");
        write_summary_csv(out, spec, rows);
    }
    {
        std::ofstream out(dir / "replicates.csv");
        if (!out) throw IoError("cannot write replicates.csv");
        out << "method,replicate,seed,deviation,iterations,converged\n";
        for (const auto& row : rows) {
            for (std::size_t r = 0; r < row.deviations.size(); ++r) {
                out << to_string(row.method) << ',' << r << ',' << replicate_seed(spec.seed, static_cast<int>(r))
                    << ',' << format_double(row.deviations[r]) << ',' << row.iterations[r] << ','
                    << (row.converged[r] ? "true" : "false") << '\n';
            }
        }
    }
    if (f.write_data) {
        const SimulatedData sim = generate(spec.setting, spec.n, replicate_seed(spec.seed, 0), spec.noise_sd);
        write_csv_matrix((dir / "design.csv").string(), sim.data.X);
        write_csv_matrix((dir / "outcome.csv").string(), sim.data.Y);
        write_dims_sidecar((dir / "outcome.csv").string(), sim.data.shape.dims());
        write_csv_matrix((dir / "gamma_star.csv").string(), sim.gamma_star);
    }
    Manifest m;
    m.set("command", std::string("simulate"));
    m.set("setting", to_string(spec.setting));
    m.set("n", static_cast<long long>(spec.n));
    m.set("replicates", static_cast<long long>(spec.replicates));
    m.set("methods", f.methods);
    m.set("noise_sd", spec.noise_sd.value_or(default_noise_sd(spec.setting)));
    m.merge(config_entries(cfg));
    m.set("seed", static_cast<long long>(spec.seed));
    for (const auto& row : rows) {
        m.set("lambda_" + to_string(row.method), row.lambda);
        m.set("failures_" + to_string(row.method), static_cast<long long>(row.failures));
        m.set("seconds_" + to_string(row.method), row.seconds);
    }
    m.set("seconds", seconds_since(t0));
    m.write((dir / "manifest.txt").string());

    write_summary_csv(std::cout, spec, rows);
    return kExitOk;
}

struct BootstrapFlags {
    int draws = 100;
    double level = 0.95;
};

int cmd_bootstrap(const Common& c, const SolverFlags& s, const InputFlags& in, const BootstrapFlags& f) {
    const auto t0 = std::chrono::steady_clock::now();
    const SolverConfig cfg = resolve_config(c, s);
    const Dataset data = load_dataset(in);
    const IncidenceGraph g = resolve_graph(in, data.shape.dims());
    const BootstrapBands bands = bootstrap_ci(data, g, cfg, f.draws, f.level, cfg.seed);
    const fs::path dir = prepare_out_dir(c.out_dir);
    write_csv_matrix((dir / "gamma.csv").string(), bands.estimate);
    write_csv_matrix((dir / "lower.csv").string(), bands.lower);
    write_csv_matrix((dir / "upper.csv").string(), bands.upper);
    Manifest m;
    record_inputs(m, "bootstrap", in, data.shape.dims());
    m.merge(config_entries(cfg));
    m.set("draws", static_cast<long long>(f.draws));
    m.set("level", f.level);
    m.set("seconds", seconds_since(t0));
    m.write((dir / "manifest.txt").string());
    return kExitOk;
}

struct TheoryFlags {
    std::string edges;
    double sigma = 1.0;
    double delta = 0.1;
    Index n = 1;
    int oracle_replicates = 0;
};

int cmd_theory(const Common& c, const SolverFlags& s, const InputFlags& in, const TheoryFlags& f) {
    if (in.dims.empty() && in.graph.empty()) throw std::invalid_argument("theory needs --dims or --graph");
    IncidenceGraph g = in.graph.empty() ? grid_graph(parse_dims(in.dims)) : read_edge_list(in.graph);
    std::vector<Index> T;
    for (const auto& item : split_list(f.edges)) T.push_back(static_cast<Index>(std::stoll(item)));
    if (T.empty()) throw std::invalid_argument("theory needs a nonempty --edges list");

    const double rho = inverse_scaling_factor(g);
    const CompatibilityEstimate kappa = compatibility_factor(g, T);
    const Index d = max_degree(g);
    OracleBoundSpec spec;
    spec.sigma = f.sigma;
    spec.delta = f.delta;
    spec.T = T;
    spec.n = f.n;
    spec.num_nodes = g.num_nodes();
    spec.num_edges = g.num_edges();
    spec.inverse_scaling = rho;
    spec.compatibility = kappa.kappa;
    spec.validate();
    const Vector zero = Vector::Zero(f.n * g.num_nodes());

    std::cout << "nodes=" << g.num_nodes() << " edges=" << g.num_edges() << " max_degree=" << d << '\n';
    std::cout << "inverse_scaling=" << format_double(rho) << '\n';
    std::cout << "kappa_T=" << format_double(kappa.kappa) << (kappa.exact ? " (exact)" : " (estimate)") << '\n';
    std::cout << "degree_lower_bound=" << format_double(compatibility_lower_bound(d, static_cast<Index>(T.size())))
              << '\n';
    std::cout << "lambda=" << format_double(spec.lambda()) << '\n';
    // theta_bar = theta_star: only the noise terms remain.
    std::cout << "oracle_rhs=" << format_double(oracle_bound_rhs(spec, g, zero, zero)) << '\n';
    std::cout << "degree_rhs=" << format_double(degree_bound_rhs(spec, g, zero, zero)) << '\n';

    if (f.oracle_replicates > 0) {
        // Intercept plus a +-1 covariate; both maps step up by 1 (0.5) at
        // every edge of T, taken along increasing node order.
        SolverConfig cfg = resolve_config(c, s);
        Matrix X(f.n, 2);
        for (Index i = 0; i < f.n; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = (i % 2 == 0) ? 1.0 : -1.0;
        }
        Matrix G = Matrix::Zero(2, g.num_nodes());
        std::vector<char> cut(static_cast<std::size_t>(g.num_edges()), 0);
        for (Index j : T) cut[j] = 1;
        // Piecewise-constant levels: count cut edges below each node.
        for (Index j = 0; j < g.num_edges(); ++j) {
            if (!cut[j]) continue;
            for (Index v = g.edges()[j].v; v < g.num_nodes(); ++v) {
                G(0, v) += 1.0;
                G(1, v) += 0.5;
            }
        }
        const OracleCheckResult r =
            oracle_check(g, X, G, f.sigma, f.delta, f.oracle_replicates, cfg.seed, cfg, cfg.threads);
        std::cout << "oracle_bound=" << format_double(r.bound) << " violations=" << r.violations << '/'
                  << (r.replicates - r.nonconverged) << " nonconverged=" << r.nonconverged
                  << " rate=" << format_double(r.violation_rate) << '\n';
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Graph-fused multivariate regression"};
    app.require_subcommand(1);

    // One flag set per subcommand: CLI11 options are bound per subcommand.
    struct Flags {
        Common common;
        SolverFlags solver;
    };
    Flags fit_f, denoise_f, sim_f, boot_f, theory_f;
    InputFlags inputs;

    auto* fit_cmd = app.add_subcommand("fit", "Fit coefficient maps");
    fit_cmd->add_option("--design", inputs.design, "Design matrix CSV (n x p)")->required();
    fit_cmd->add_option("--outcome", inputs.outcome, "Outcome CSV (n x M)")->required();
    add_graph_inputs(fit_cmd, inputs);
    add_solver(fit_cmd, fit_f.solver);
    add_common(fit_cmd, fit_f.common, fit_f.solver);

    auto* denoise_cmd = app.add_subcommand("denoise", "TV-denoise each row of a table");
    denoise_cmd->add_option("--outcome", inputs.outcome, "Images CSV, one per row")->required();
    add_graph_inputs(denoise_cmd, inputs);
    add_solver(denoise_cmd, denoise_f.solver);
    add_common(denoise_cmd, denoise_f.common, denoise_f.solver);

    GraphFlags graph_flags;
    auto* graph_cmd = app.add_subcommand("graph", "Write an edge list");
    graph_cmd->add_option("--dims", graph_flags.dims, "Grid dims, e.g. 30,36,30");
    graph_cmd->add_option("--input", graph_flags.input, "Existing edge list to augment");
    graph_cmd->add_option("--lag", graph_flags.lag, "Add edges (i, i + lag)");
    graph_cmd->add_option("--count", graph_flags.count, "... for i < count");
    graph_cmd->add_option("--out", graph_flags.out, "Output file (default stdout)");

    SimulateFlags sim_flags;
    double noise_sd = 0.0;
    auto* sim_cmd = app.add_subcommand("simulate", "Replicate a simulation table cell");
    sim_cmd->add_option("--setting", sim_flags.setting, "1d-1, 1d-2, 2d-1 or 2d-2")->capture_default_str();
    sim_cmd->add_option("--n", sim_flags.n, "Sample size")->capture_default_str();
    sim_cmd->add_option("--method", sim_flags.methods, "Comma list of gfmr, periodic, tv_ols, ols_tv, ols")
        ->capture_default_str();
    sim_cmd->add_option("--replicates", sim_flags.replicates, "Replicates")->capture_default_str();
    auto* noise_opt = sim_cmd->add_option("--noise-sd", noise_sd, "Noise sd (default: setting's)");
    sim_cmd->add_flag("--write-data", sim_flags.write_data, "Also write the first replicate's data");
    add_solver(sim_cmd, sim_f.solver);
    add_common(sim_cmd, sim_f.common, sim_f.solver);

    BootstrapFlags boot_flags;
    auto* boot_cmd = app.add_subcommand("bootstrap", "Bootstrap quantile bands for the coefficient maps");
    boot_cmd->add_option("--design", inputs.design, "Design matrix CSV (n x p)")->required();
    boot_cmd->add_option("--outcome", inputs.outcome, "Outcome CSV (n x M)")->required();
    boot_cmd->add_option("--draws", boot_flags.draws, "Bootstrap draws")->capture_default_str();
    boot_cmd->add_option("--level", boot_flags.level, "Coverage level")->capture_default_str();
    add_graph_inputs(boot_cmd, inputs);
    add_solver(boot_cmd, boot_f.solver);
    add_common(boot_cmd, boot_f.common, boot_f.solver);

    TheoryFlags theory_flags;
    auto* theory_cmd = app.add_subcommand("theory", "Compatibility, inverse scaling and oracle bound");
    add_graph_inputs(theory_cmd, inputs);
    theory_cmd->add_option("--edges", theory_flags.edges, "Comma list of edge ids forming T")->required();
    theory_cmd->add_option("--sigma", theory_flags.sigma, "Noise sd")->capture_default_str();
    theory_cmd->add_option("--delta", theory_flags.delta, "Failure probability")->capture_default_str();
    theory_cmd->add_option("--n", theory_flags.n, "Subjects")->capture_default_str();
    theory_cmd->add_option("--oracle-replicates", theory_flags.oracle_replicates,
                           "Monte Carlo replicates of the oracle check (0 = skip)");
    add_solver(theory_cmd, theory_f.solver);
    add_common(theory_cmd, theory_f.common, theory_f.solver);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    if (noise_opt->count()) sim_flags.noise_sd = noise_sd;

    try {
        if (*fit_cmd) return cmd_fit(fit_f.common, fit_f.solver, inputs);
        if (*denoise_cmd) return cmd_denoise(denoise_f.common, denoise_f.solver, inputs);
        if (*graph_cmd) return cmd_graph(graph_flags);
        if (*sim_cmd) return cmd_simulate(sim_f.common, sim_f.solver, sim_flags);
        if (*boot_cmd) return cmd_bootstrap(boot_f.common, boot_f.solver, inputs, boot_flags);
        if (*theory_cmd) return cmd_theory(theory_f.common, theory_f.solver, inputs, theory_flags);
    } catch (const ShapeError& e) {
        std::cerr << "gfmr: shape error: " << e.what() << '\n';
        return kExitShape;
    } catch (const GraphError& e) {
        std::cerr << "gfmr: graph error: " << e.what() << '\n';
        return kExitShape;
    } catch (const RankDeficientError& e) {
        std::cerr << "gfmr: rank deficient design: " << e.what() << '\n';
        return kExitRank;
    } catch (const IoError& e) {
        std::cerr << "gfmr: I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "gfmr: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace gfmr
