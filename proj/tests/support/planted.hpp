#pragma once

#include <vector>

#include "ipe/affinity.hpp"
#include "ipe/feature_io.hpp"
#include "ipe/random.hpp"

namespace ipe::testing {

struct PlantedAffinity {
    AffinityMap affinity;  // 1 x n grid
    std::vector<int> labels;
    int blocks = 0;
};

/// Symmetric block affinity: within-block entries in [0.6, 1], cross-block
/// entries in [-cross, cross], unit diagonal, nodes shuffled across blocks.
inline PlantedAffinity planted_affinity(Rng& rng, int blocks, int n, double cross = 0.1) {
    PlantedAffinity out;
    out.blocks = blocks;
    out.labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.labels[static_cast<std::size_t>(i)] = i % blocks;
    for (std::size_t i = out.labels.size() - 1; i > 0; --i) std::swap(out.labels[i], out.labels[rng.below(i + 1)]);
    out.affinity.grid_h = 1;
    out.affinity.grid_w = static_cast<std::uint32_t>(n);
    out.affinity.values.resize(n, n);
    for (int i = 0; i < n; ++i) {
        out.affinity.values(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) {
            const bool same = out.labels[static_cast<std::size_t>(i)] == out.labels[static_cast<std::size_t>(j)];
            const double v = same ? 0.6 + 0.4 * rng.uniform() : cross * (2.0 * rng.uniform() - 1.0);
            out.affinity.values(i, j) = out.affinity.values(j, i) = v;
        }
    }
    return out;
}

struct PlantedFeatures {
    FeatureMap features;
    std::vector<int> labels;  // per cell, row-major
};

/// Three regions on a size x size grid (central disc, upper and lower
/// background); region r sets channel r to 1, all channels get Gaussian noise.
inline PlantedFeatures planted_regions(Rng& rng, std::uint32_t size, std::uint32_t channels, double sigma) {
    PlantedFeatures out;
    out.features.channels = channels;
    out.features.height = size;
    out.features.width = size;
    const std::size_t n = std::size_t{size} * size;
    out.features.data.assign(channels * n, 0.0f);
    out.labels.resize(n);
    const double c = size / 2.0;
    const double r = size / 4.0;
    for (std::uint32_t y = 0; y < size; ++y) {
        for (std::uint32_t x = 0; x < size; ++x) {
            const double dy = y + 0.5 - c;
            const double dx = x + 0.5 - c;
            const int region = dx * dx + dy * dy <= r * r ? 0 : (dy < 0 ? 1 : 2);
            const std::size_t px = std::size_t{y} * size + x;
            out.labels[px] = region;
            for (std::uint32_t ch = 0; ch < channels; ++ch) {
                const double u1 = 1.0 - rng.uniform();
                const double u2 = rng.uniform();
                const double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
                out.features.data[ch * n + px] = static_cast<float>((static_cast<int>(ch) == region ? 1.0 : 0.0) + sigma * g);
            }
        }
    }
    return out;
}

}  // namespace ipe::testing
