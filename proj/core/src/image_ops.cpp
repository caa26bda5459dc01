#include "ipe/image_ops.hpp"

#include <algorithm>
#include <cmath>

#include "ipe/error.hpp"
#include "sampling.hpp"

namespace ipe {

ImageBuffer resize_bilinear(const ImageBuffer& img, std::uint32_t height, std::uint32_t width) {
    if (img.height == 0 || img.width == 0 || height == 0 || width == 0)
        throw Error(ErrorCode::InvalidArgument, "resize requires positive dims");
    if (img.height == height && img.width == width) return img;
    ImageBuffer out(height, width);
    for (std::uint32_t y = 0; y < height; ++y) {
        const double sy = (y + 0.5) * img.height / height;
        for (std::uint32_t x = 0; x < width; ++x) {
            const double sx = (x + 0.5) * img.width / width;
            double rgb[3];
            detail::sample_bilinear(img, sx, sy, rgb);
            auto* dst = out.px(y, x);
            for (int c = 0; c < 3; ++c) dst[c] = detail::quantize(rgb[c]);
        }
    }
    return out;
}

MaskBuffer resize_nearest(const MaskBuffer& mask, std::uint32_t height, std::uint32_t width) {
    if (mask.height == 0 || mask.width == 0 || height == 0 || width == 0)
        throw Error(ErrorCode::InvalidArgument, "resize requires positive dims");
    MaskBuffer out(height, width);
    for (std::uint32_t y = 0; y < height; ++y) {
        const auto sy = static_cast<std::uint32_t>((std::uint64_t{y} * 2 + 1) * mask.height / (std::uint64_t{height} * 2));
        for (std::uint32_t x = 0; x < width; ++x) {
            const auto sx = static_cast<std::uint32_t>((std::uint64_t{x} * 2 + 1) * mask.width / (std::uint64_t{width} * 2));
            out.at(y, x) = mask.at(sy, sx);
        }
    }
    return out;
}

}  // namespace ipe
