#include "ipe/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ipe/error.hpp"
#include "ipe/random.hpp"

namespace ipe {

namespace {

double gaussian(Rng& rng) {
    // Box-Muller; u1 in (0, 1].
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

enum Region { kDisc = 0, kTop = 1, kBottom = 2 };

Region region_at(double y, double x, double centre, double radius) {
    const double dy = y - centre;
    const double dx = x - centre;
    if (dx * dx + dy * dy <= radius * radius) return kDisc;
    return y < centre ? kTop : kBottom;
}

}  // namespace

SyntheticScene make_disc_scene(std::uint64_t seed, const SyntheticSceneSpec& spec) {
    if (spec.image_size == 0 || spec.grid_size == 0 || spec.grid_size > spec.image_size || spec.channels < 3)
        throw Error(ErrorCode::InvalidArgument, "invalid synthetic scene spec");
    const std::uint32_t size = spec.image_size;
    const double centre = size / 2.0;
    const double radius = spec.disc_radius_frac * size;
    constexpr std::uint8_t kColors[3][3] = {{235, 215, 50}, {35, 60, 140}, {40, 115, 55}};

    SyntheticScene scene;
    scene.image = ImageBuffer(size, size);
    scene.disc = MaskBuffer(size, size);
    Rng pixel_rng(derive_seed(seed, 1));
    for (std::uint32_t y = 0; y < size; ++y) {
        for (std::uint32_t x = 0; x < size; ++x) {
            const Region r = region_at(y + 0.5, x + 0.5, centre, radius);
            scene.disc.at(y, x) = r == kDisc ? 1 : 0;
            std::uint8_t* px = scene.image.px(y, x);
            for (int c = 0; c < 3; ++c) {
                const double v = kColors[r][c] + spec.pixel_noise * gaussian(pixel_rng);
                px[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }

    // Area fractions by 8x8 supersampling of each feature cell.
    const std::uint32_t g = spec.grid_size;
    const double cell = static_cast<double>(size) / g;
    constexpr int kSamples = 8;
    FeatureMap& f = scene.features;
    f.channels = spec.channels;
    f.height = g;
    f.width = g;
    f.data.assign(std::size_t{f.channels} * g * g, 0.0f);
    Rng feature_rng(derive_seed(seed, 2));
    for (std::uint32_t gy = 0; gy < g; ++gy) {
        for (std::uint32_t gx = 0; gx < g; ++gx) {
            double frac[3] = {0.0, 0.0, 0.0};
            for (int sy = 0; sy < kSamples; ++sy)
                for (int sx = 0; sx < kSamples; ++sx)
                    frac[region_at((gy + (sy + 0.5) / kSamples) * cell, (gx + (sx + 0.5) / kSamples) * cell, centre,
                                   radius)] += 1.0 / (kSamples * kSamples);
            for (std::uint32_t ch = 0; ch < f.channels; ++ch) {
                const double signal = ch < 3 ? frac[ch] : 0.0;
                f.data[(std::size_t{ch} * g + gy) * g + gx] =
                    static_cast<float>(signal + spec.noise_sigma * gaussian(feature_rng));
            }
        }
    }
    return scene;
}

}  // namespace ipe
