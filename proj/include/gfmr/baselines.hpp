#pragma once

#include "gfmr/core_model.hpp"
#include "gfmr/fused_lasso.hpp"
#include "gfmr/graph.hpp"

namespace gfmr {

// Total-variation denoising of a single signal on g.
Vector tv_denoise(const IncidenceGraph& g, const Vector& image, double lam, const GflConfig& cfg = {});

// Denoise every subject's outcome, then regress voxel-wise. Returns p x M.
Matrix tv_ols_fit(const Dataset& data, const IncidenceGraph& g, double lam, const GflConfig& cfg = {},
                  int threads = 1);

// Regress voxel-wise, then denoise every coefficient map. Returns p x M.
Matrix ols_tv_fit(const Dataset& data, const IncidenceGraph& g, double lam, const GflConfig& cfg = {},
                  int threads = 1);

}  // namespace gfmr
