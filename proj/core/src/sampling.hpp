#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "ipe/feature_io.hpp"

namespace ipe::detail {

// Bilinear sample at continuous source coordinates (pixel centres at i + 0.5),
// clamped to the border.
inline void sample_bilinear(const ImageBuffer& img, double sx, double sy, double out[3]) {
    const double max_x = static_cast<double>(img.width) - 1;
    const double max_y = static_cast<double>(img.height) - 1;
    const double fx = std::clamp(sx - 0.5, 0.0, max_x);
    const double fy = std::clamp(sy - 0.5, 0.0, max_y);
    const auto x0 = static_cast<std::uint32_t>(fx);
    const auto y0 = static_cast<std::uint32_t>(fy);
    const std::uint32_t x1 = std::min(x0 + 1, img.width - 1);
    const std::uint32_t y1 = std::min(y0 + 1, img.height - 1);
    const double wx = fx - x0;
    const double wy = fy - y0;
    const std::uint8_t* p00 = img.px(y0, x0);
    const std::uint8_t* p01 = img.px(y0, x1);
    const std::uint8_t* p10 = img.px(y1, x0);
    const std::uint8_t* p11 = img.px(y1, x1);
    for (int c = 0; c < 3; ++c) {
        const double top = p00[c] * (1 - wx) + p01[c] * wx;
        const double bottom = p10[c] * (1 - wx) + p11[c] * wx;
        out[c] = top * (1 - wy) + bottom * wy;
    }
}

inline std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

// Nearest source index for a continuous coordinate.
inline std::uint32_t nearest_index(double s, std::uint32_t size) {
    const double f = std::floor(s);
    if (f <= 0.0) return 0;
    if (f >= size - 1.0) return size - 1;
    return static_cast<std::uint32_t>(f);
}

}  // namespace ipe::detail
