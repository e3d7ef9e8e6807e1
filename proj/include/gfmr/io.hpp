#pragma once

#include "gfmr/gfmr.hpp"
#include "gfmr/types.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gfmr {

// Headerless comma-separated tables of decimal floats, one row per line,
// written with 17 significant digits so that reading them back is exact.
Matrix read_csv_matrix(std::istream& in, const std::string& label = "input");
Matrix read_csv_matrix(const std::string& path);
void write_csv_matrix(std::ostream& out, const Matrix& A);
void write_csv_matrix(const std::string& path, const Matrix& A);

std::string format_double(double x);

// "40,40" -> {40, 40}.
std::vector<Index> parse_dims(const std::string& text);
std::string format_dims(const std::vector<Index>& dims);

// Tensor dims of an outcome table live next to it in "<path>.dims".
std::string dims_sidecar_path(const std::string& outcome_path);
std::optional<std::vector<Index>> read_dims_sidecar(const std::string& outcome_path);
void write_dims_sidecar(const std::string& outcome_path, const std::vector<Index>& dims);

// Flat key=value files; '#' starts a comment, blank lines are skipped.
using KeyValues = std::map<std::string, std::string>;
KeyValues read_key_values(std::istream& in, const std::string& label = "input");
KeyValues read_key_values(const std::string& path);

// Overrides the SolverConfig fields named in `kv` (lambda, rho, tol,
// max_iter, seed, threads, batch_size, inner_penalty, inner_tol,
// inner_max_iter, relaxation, warm_start). Other keys are ignored.
SolverConfig apply_config(const KeyValues& kv, SolverConfig cfg);
KeyValues config_entries(const SolverConfig& cfg);

// Ordered key=value record of a run, readable by read_key_values.
class Manifest {
public:
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    void set(const std::string& key, long long value);
    void set(const std::string& key, bool value);
    void merge(const KeyValues& kv);
    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
    void write(std::ostream& out) const;
    void write(const std::string& path) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace gfmr
