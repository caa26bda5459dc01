#pragma once

#include <cstdint>

#include "ipe/feature_io.hpp"

namespace ipe {

// Resampling with pixel centres at (i + 0.5); identical dims are an exact copy.
ImageBuffer resize_bilinear(const ImageBuffer& img, std::uint32_t height, std::uint32_t width);
MaskBuffer resize_nearest(const MaskBuffer& mask, std::uint32_t height, std::uint32_t width);

}  // namespace ipe
