#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>

#include "ipe/feature_io.hpp"

namespace ipe {

/// Pixel-pair cosine similarities of a feature map. Pixels are flattened
/// row-major over the feature grid: index = y * grid_w + x.
struct AffinityMap {
    std::uint32_t grid_h = 0;
    std::uint32_t grid_w = 0;
    Eigen::MatrixXd values;

    Eigen::Index size() const noexcept { return values.rows(); }
};

/// Dot product of two float vectors, rounded once from the exact sum.
/// The result does not depend on element order: every float product is
/// accumulated exactly in a fixed-point register before the final rounding.
double exact_dot(std::span<const float> a, std::span<const float> b);

/// Pixel-major copy of the feature vectors: row i holds f_i.
Eigen::MatrixXd pixel_features(const FeatureMap& f);

/// A[i][j] = f_i . f_j / (|f_i| |f_j|). Throws ZeroNormPixel when any
/// |f_i| <= 1e-12. Rows are computed in parallel when workers > 1.
AffinityMap compute_affinity(const FeatureMap& f, int workers = 1);

}  // namespace ipe
