#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "sglab/raster.hpp"

namespace sglab {

// Row-major non-overlapping patches; one row per patch, values in [0,1].
struct PatchSequence {
    Eigen::MatrixXf patches;  // (side/patch_side)^2 x patch_side^2*3
    std::vector<std::pair<int, int>> grid_coords;  // (row, col) per patch
    int patch_side = 0;
    int image_side = 0;

    int count() const { return static_cast<int>(patches.rows()); }
};

PatchSequence patchify(const Image& image, int patch_side);

// Exact inverse; used to check losslessness.
Image unpatchify(const PatchSequence& seq);

}  // namespace sglab
