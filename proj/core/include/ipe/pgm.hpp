#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ipe/crf.hpp"
#include "ipe/error.hpp"
#include "ipe/feature_io.hpp"
#include "ipe/selection.hpp"
#include "ipe/spectral.hpp"

namespace ipe {

/// One binary figure/ground label cut from a refined clustering.
struct PseudoLabel {
    MaskBuffer mask;
    std::string source_image_id;
    int cluster_id = 0;
    double d_q = 0.0;
    double ch_of_best = 0.0;
    int k_best = 0;
};

struct PgmConfig {
    std::uint32_t input_size = 672;
    int m = 3;  // smallest cluster count tried
    int n = 5;  // largest cluster count tried
    int t = 2;  // pseudo-labels kept per image
    SpectralConfig spectral;
    CrfParams crf;
    double min_frac = 0.01;
    double max_frac = 0.95;

    bool operator==(const PgmConfig&) const = default;
};

void validate(const PgmConfig& cfg);

enum class ClusterOutcome { Selected, TooSmall, TooLarge, BeyondTopT };

std::string_view to_string(ClusterOutcome o) noexcept;

struct ClusterAudit {
    CentralityEntry entry;
    ClusterOutcome outcome = ClusterOutcome::BeyondTopT;
};

/// Everything the pipeline decided for one image, including why it skipped.
struct PgmReport {
    std::string image_id;
    std::optional<ErrorCode> skip_reason;
    std::string skip_detail;
    int k_best = 0;
    ChScore best_score;
    std::vector<CandidateScore> candidates;
    std::vector<ClusterAudit> clusters;  // centrality order
    std::vector<PseudoLabel> labels;

    bool skipped() const noexcept { return skip_reason.has_value(); }
};

/// Affinity, CH-selected spectral clustering over [m, n], CRF refinement at
/// image resolution, centrality ranking and top-t selection. Per-image
/// failures are reported in the result instead of thrown. Throws
/// InvalidArgument when the inputs break the preconditions (image not
/// input_size square, feature map invalid).
PgmReport run_pgm(const ImageBuffer& img, const FeatureMap& f, const PgmConfig& cfg, const std::string& image_id = {});

/// As run_pgm, but a skipped image is raised as SkippedImage.
std::vector<PseudoLabel> generate_pseudo_labels(const ImageBuffer& img, const FeatureMap& f, const PgmConfig& cfg,
                                                const std::string& image_id = {});

/// key=value audit record for one image.
std::string format_sidecar(const PgmReport& report);

}  // namespace ipe
