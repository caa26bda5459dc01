#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ipe/feature_io.hpp"
#include "ipe/spectral.hpp"

namespace ipe {

/// Per-pixel label distribution, pixel-major: probs[p * labels_k + l].
struct UnaryField {
    int labels_k = 0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<double> probs;

    std::size_t pixel_count() const noexcept { return std::size_t{height} * width; }
    double prob(std::size_t pixel, int label) const { return probs[pixel * static_cast<std::size_t>(labels_k) + static_cast<std::size_t>(label)]; }
};

enum class CrfFilter {
    Auto,         // exact below kExactFilterMaxPixels, approximate above
    Exact,        // O(n^2) pairwise sums
    Approximate,  // separable spatial Gaussian + 5-D bilateral grid
};

inline constexpr std::size_t kExactFilterMaxPixels = 4096;

struct CrfParams {
    double w_appearance = 10.0;
    double theta_alpha = 80.0;  // appearance kernel, position (pixels)
    double theta_beta = 13.0;   // appearance kernel, colour (0..255 units)
    double w_smoothness = 3.0;
    double theta_gamma = 3.0;   // smoothness kernel, position (pixels)
    int iterations = 10;
    double label_smooth_eps = 0.1;
    CrfFilter filter = CrfFilter::Auto;
    int workers = 1;

    bool operator==(const CrfParams&) const = default;
};

void validate(const CrfParams& p);

/// Nearest-neighbour upsampling: pixel (y, x) takes grid cell
/// (y * grid_h / image_h, x * grid_w / image_w).
std::vector<int> upsample_labels(const ClusterResult& c, std::uint32_t image_h, std::uint32_t image_w);

/// Label q gets 1 - eps, every other label eps / (k - 1).
UnaryField labels_to_unary(const std::vector<int>& labels, std::uint32_t height, std::uint32_t width, int k,
                           double eps);

/// Per-pixel argmax, ties to the smaller label id.
std::vector<int> argmax_labels(const UnaryField& u);

/// Weighted pairwise messages for every pixel p and label l, in the layout of
/// UnaryField::probs. Each kernel contributes
///   w * sum_{j != p} k(p, j) q_j(l) / (1 + sum_{j != p} k(p, j)),
/// so a message never exceeds its kernel weight.
std::vector<double> pairwise_messages(const ImageBuffer& img, const UnaryField& q, const CrfParams& p);

struct CrfResult {
    UnaryField field;
    std::vector<int> labels;
};

/// Called after every mean-field iteration with the 1-based iteration index.
using CrfObserver = std::function<void(int, const UnaryField&)>;

/// Fully connected CRF with Potts compatibility, inferred by `iterations`
/// synchronous mean-field updates started from the unary field itself. Each
/// update reads only the previous iterate, so the result is independent of
/// pixel order and worker count.
CrfResult mean_field_refine(const ImageBuffer& img, const UnaryField& u, const CrfParams& p,
                            const CrfObserver& observer = {});

}  // namespace ipe
