#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ipe/feature_io.hpp"
#include "ipe/pgm.hpp"
#include "ipe/random.hpp"

namespace ipe {

// Stage specs, applied in this order. Each stage is included independently
// with probability p; magnitudes are sampled uniformly from the ranges.
struct CropSpec {
    double p = 1.0;
    double scale_min = 0.2;
    double scale_max = 1.0;
    double ratio_min = 3.0 / 4.0;
    double ratio_max = 4.0 / 3.0;
    bool operator==(const CropSpec&) const = default;
};
struct RotationSpec {
    double p = 0.4;
    double degrees = 10.0;  // angle drawn from [-degrees, degrees]
    bool operator==(const RotationSpec&) const = default;
};
struct JitterSpec {
    double p = 0.8;
    double brightness = 0.4;
    double contrast = 0.4;
    double saturation = 0.4;
    double hue = 0.1;
    bool operator==(const JitterSpec&) const = default;
};
struct GrayscaleSpec {
    double p = 0.2;
    bool operator==(const GrayscaleSpec&) const = default;
};
struct BlurSpec {
    double p = 0.8;
    double sigma_min = 0.1;
    double sigma_max = 2.0;
    bool operator==(const BlurSpec&) const = default;
};
struct FlipSpec {
    double p = 0.5;
    bool operator==(const FlipSpec&) const = default;
};

struct TransformConfig {
    CropSpec crop;
    RotationSpec rotation;
    JitterSpec jitter;
    GrayscaleSpec grayscale;
    BlurSpec blur;
    FlipSpec flip;
    std::uint32_t out_size = 225;

    /// Inclusion probabilities in stage order.
    std::array<double, 6> probabilities() const noexcept {
        return {crop.p, rotation.p, jitter.p, grayscale.p, blur.p, flip.p};
    }

    bool operator==(const TransformConfig&) const = default;
};

void validate(const TransformConfig& cfg);

/// Crop box in image-independent form; resolved against the input dims when applied.
struct CropParams {
    double scale = 1.0;      // area fraction
    double log_ratio = 0.0;  // log(width / height)
    double u_top = 0.0;      // position within the free vertical range, [0, 1]
    double u_left = 0.0;
};

enum class JitterOp : std::uint8_t { Brightness, Contrast, Saturation, Hue };

struct JitterParams {
    double brightness = 1.0;  // multiplicative factors
    double contrast = 1.0;
    double saturation = 1.0;
    double hue = 0.0;  // shift in turns, [-0.5, 0.5]
    std::array<JitterOp, 4> order{JitterOp::Brightness, JitterOp::Contrast, JitterOp::Saturation, JitterOp::Hue};
};

/// Fully determined pipeline. Absent stages are skipped; a missing crop means
/// the whole image is resized to out_size.
struct ConcreteTransform {
    std::optional<CropParams> crop;
    std::optional<double> rotation_degrees;  // counter-clockwise
    std::optional<JitterParams> jitter;
    bool grayscale = false;
    std::optional<double> blur_sigma;
    bool hflip = false;
    std::uint32_t out_size = 225;

    std::array<bool, 6> included() const noexcept {
        return {crop.has_value(), rotation_degrees.has_value(), jitter.has_value(),
                grayscale, blur_sigma.has_value(), hflip};
    }
};

ConcreteTransform sample_transform(const TransformConfig& cfg, UniformSource& rng);

/// Crop rectangle in continuous source coordinates.
struct CropBox {
    double top = 0.0;
    double left = 0.0;
    double height = 0.0;
    double width = 0.0;
};

CropBox resolve_crop(const ConcreteTransform& t, std::uint32_t height, std::uint32_t width);

/// Geometric stages (crop, rotation, flip) act identically on image and mask;
/// the image is sampled bilinearly and the mask by nearest neighbour.
/// Photometric stages (jitter, grayscale, blur) touch the image only.
struct View {
    ImageBuffer image;
    MaskBuffer mask;

    bool operator==(const View&) const = default;
};

View apply_transform(const ConcreteTransform& t, const ImageBuffer& img, const MaskBuffer& mask);

struct EpisodeConfig {
    TransformConfig transforms;
    std::size_t min_foreground = 16;
    int max_resamples = 10;

    bool operator==(const EpisodeConfig&) const = default;
};

struct Episode {
    View query;
    std::vector<View> supports;
    int k_shot = 0;
    std::string source_image_id;
    int pseudo_label_cluster_id = 0;
    std::uint64_t seed = 0;
    int query_view = 0;  // which of the K + 1 views became the query

    bool operator==(const Episode&) const = default;
};

/// Draws K + 1 views of (img, label.mask) and picks one uniformly as the query.
/// View i uses its own stream derived from (seed, i, attempt), so adding shots
/// never changes earlier views. A view with fewer than min_foreground
/// foreground pixels is redrawn up to max_resamples times; after that the
/// episode fails with EpisodeDegenerate.
Episode generate_episode(const ImageBuffer& img, const PseudoLabel& label, int k_shot, const EpisodeConfig& cfg,
                         std::uint64_t seed);

inline constexpr std::string_view kEpisodeManifestHeader =
    "# ipe episode manifest v1\n"
    "# columns: episode_id\tsource_image_id\tcluster_id\tk_shot\tseed\n"
    "# batching: train with 4 pseudo-episodes per real episode (pseudo batch = 4x real batch)\n";

/// Writes query.png, query_mask.png, support_<i>.png, support_<i>_mask.png (i from 1).
void write_episode(const std::filesystem::path& dir, const Episode& episode);

/// One tab-separated manifest record, newline terminated.
std::string manifest_line(const std::string& episode_id, const Episode& episode);

}  // namespace ipe
