#include "gfmr/baselines.hpp"

#include "gfmr/parallel.hpp"

namespace gfmr {

namespace {

// Denoises each row of `rows` independently.
Matrix denoise_rows(const IncidenceGraph& g, const Matrix& rows, double lam, const GflConfig& cfg, int threads) {
    if (rows.cols() != g.num_nodes()) throw ShapeError("row length differs from graph node count");
    Matrix out(rows.rows(), rows.cols());
    if (lam == 0.0) return rows;
    const GflSolver solver(g, cfg);
    parallel_for(rows.rows(), threads, [&](Index i) {
        out.row(i) = solver.solve(rows.row(i).transpose(), lam).mu.transpose();
    });
    return out;
}

}  // namespace

Vector tv_denoise(const IncidenceGraph& g, const Vector& image, double lam, const GflConfig& cfg) {
    return gfl_solve(g, image, lam, cfg).mu;
}

Matrix tv_ols_fit(const Dataset& data, const IncidenceGraph& g, double lam, const GflConfig& cfg, int threads) {
    data.validate();
    const ProjectionOperator op(data.X);
    return op.solve(denoise_rows(g, data.Y, lam, cfg, threads));
}

Matrix ols_tv_fit(const Dataset& data, const IncidenceGraph& g, double lam, const GflConfig& cfg, int threads) {
    data.validate();
    const ProjectionOperator op(data.X);
    return denoise_rows(g, op.solve(data.Y), lam, cfg, threads);
}

}  // namespace gfmr
