#include "gfmr/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gfmr {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& token, const std::string& where) {
    const std::string t = trim(token);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw IoError(where + ": cannot parse '" + t + "' as a number");
    }
    return x;
}

long long parse_int(const std::string& token, const std::string& key) {
    const std::string t = trim(token);
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw std::invalid_argument("config key '" + key + "': '" + t + "' is not an integer");
    }
    return x;
}

bool parse_bool(const std::string& token, const std::string& key) {
    const std::string t = trim(token);
    if (t == "true" || t == "1") return true;
    if (t == "false" || t == "0") return false;
    throw std::invalid_argument("config key '" + key + "': '" + t + "' is not a boolean");
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Matrix read_csv_matrix(std::istream& in, const std::string& label) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        const std::string where = label + ":" + std::to_string(lineno);
        while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell, where));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw IoError(where + ": expected " + std::to_string(rows.front().size()) + " columns, found " +
                          std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(label + ": empty table");
    Matrix A(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < A.rows(); ++i) {
        for (Index j = 0; j < A.cols(); ++j) A(i, j) = rows[i][j];
    }
    return A;
}

Matrix read_csv_matrix(const std::string& path) {
    std::ifstream in = open_in(path);
    return read_csv_matrix(in, path);
}

void write_csv_matrix(std::ostream& out, const Matrix& A) {
    for (Index i = 0; i < A.rows(); ++i) {
        for (Index j = 0; j < A.cols(); ++j) {
            if (j) out << ',';
            out << format_double(A(i, j));
        }
        out << '\n';
    }
}

void write_csv_matrix(const std::string& path, const Matrix& A) {
    std::ofstream out = open_out(path);
    write_csv_matrix(out, A);
    if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<Index> parse_dims(const std::string& text) {
    std::vector<Index> dims;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const long long d = parse_int(cell, "dims");
        if (d < 1) throw ShapeError("dims must be positive, got " + std::to_string(d));
        dims.push_back(static_cast<Index>(d));
    }
    if (dims.empty()) throw ShapeError("dims must list at least one extent");
    return dims;
}

std::string format_dims(const std::vector<Index>& dims) {
    std::string out;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (k) out += ',';
        out += std::to_string(dims[k]);
    }
    return out;
}

std::string dims_sidecar_path(const std::string& outcome_path) { return outcome_path + ".dims"; }

std::optional<std::vector<Index>> read_dims_sidecar(const std::string& outcome_path) {
    std::ifstream in(dims_sidecar_path(outcome_path));
    if (!in) return std::nullopt;
    std::string line;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) return parse_dims(trim(line));
    }
    throw IoError(dims_sidecar_path(outcome_path) + ": no dims found");
}

void write_dims_sidecar(const std::string& outcome_path, const std::vector<Index>& dims) {
    std::ofstream out = open_out(dims_sidecar_path(outcome_path));
    out << format_dims(dims) << '\n';
}

KeyValues read_key_values(std::istream& in, const std::string& label) {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError(label + ":" + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw IoError(label + ":" + std::to_string(lineno) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues read_key_values(const std::string& path) {
    std::ifstream in = open_in(path);
    return read_key_values(in, path);
}

SolverConfig apply_config(const KeyValues& kv, SolverConfig cfg) {
    for (const auto& [key, value] : kv) {
        if (key == "lambda") cfg.lam = parse_double(value, key);
        else if (key == "rho") cfg.admm_penalty = parse_double(value, key);
        else if (key == "tol") cfg.tol = parse_double(value, key);
        else if (key == "max_iter") cfg.max_iter = static_cast<int>(parse_int(value, key));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
        else if (key == "threads") cfg.threads = static_cast<int>(parse_int(value, key));
        else if (key == "batch_size") cfg.batch_size = static_cast<Index>(parse_int(value, key));
        else if (key == "inner_penalty") cfg.gfl.inner_penalty = parse_double(value, key);
        else if (key == "inner_tol") cfg.gfl.inner_tol = parse_double(value, key);
        else if (key == "inner_max_iter") cfg.gfl.inner_max_iter = static_cast<int>(parse_int(value, key));
        else if (key == "relaxation") cfg.gfl.relaxation = parse_double(value, key);
        else if (key == "warm_start") cfg.gfl.warm_start = parse_bool(value, key);
    }
    cfg.validate();
    return cfg;
}

KeyValues config_entries(const SolverConfig& cfg) {
    return {
        {"lambda", format_double(cfg.lam)},
        {"rho", format_double(cfg.admm_penalty)},
        {"tol", format_double(cfg.tol)},
        {"max_iter", std::to_string(cfg.max_iter)},
        {"seed", std::to_string(cfg.seed)},
        {"threads", std::to_string(cfg.threads)},
        {"batch_size", std::to_string(cfg.batch_size)},
        {"inner_penalty", format_double(cfg.gfl.inner_penalty)},
        {"inner_tol", format_double(cfg.gfl.inner_tol)},
        {"inner_max_iter", std::to_string(cfg.gfl.inner_max_iter)},
        {"relaxation", format_double(cfg.gfl.relaxation)},
        {"warm_start", cfg.gfl.warm_start ? "true" : "false"},
    };
}

void Manifest::set(const std::string& key, const std::string& value) {
    if (key.empty() || key.find_first_of("=#\n") != std::string::npos) {
        throw std::invalid_argument("invalid manifest key '" + key + "'");
    }
    if (value.find('\n') != std::string::npos || value.find('#') != std::string::npos) {
        throw std::invalid_argument("manifest value for '" + key + "' contains '#' or a newline");
    }
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void Manifest::set(const std::string& key, double value) { set(key, format_double(value)); }
void Manifest::set(const std::string& key, long long value) { set(key, std::to_string(value)); }
void Manifest::set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

void Manifest::merge(const KeyValues& kv) {
    for (const auto& [k, v] : kv) set(k, v);
}

void Manifest::write(std::ostream& out) const {
    for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
}

void Manifest::write(const std::string& path) const {
    std::ofstream out = open_out(path);
    write(out);
    if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace gfmr
