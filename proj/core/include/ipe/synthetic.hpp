#pragma once

#include <cstdint>

#include "ipe/feature_io.hpp"

namespace ipe {

/// Planted test scene: a centred high-contrast disc over a background split
/// into top and bottom halves. Feature channels 0..2 hold each feature
/// cell's area fraction of (disc, top, bottom); all channels carry
/// N(0, noise_sigma^2) noise.
struct SyntheticScene {
    ImageBuffer image;
    FeatureMap features;
    MaskBuffer disc;  // ground truth at image resolution
};

struct SyntheticSceneSpec {
    std::uint32_t image_size = 672;
    std::uint32_t grid_size = 21;
    std::uint32_t channels = 8;
    double disc_radius_frac = 0.25;  // of image size
    double noise_sigma = 0.1;
    double pixel_noise = 6.0;  // image noise std, 0..255 units
};

SyntheticScene make_disc_scene(std::uint64_t seed, const SyntheticSceneSpec& spec = {});

}  // namespace ipe
