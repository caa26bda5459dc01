#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ipe/affinity.hpp"
#include "ipe/spectral.hpp"

namespace ipe {

/// Calinski-Harabasz index. When the within-cluster scatter vanishes the
/// ratio is undefined; value is then +inf and perfect_separation is set.
struct ChScore {
    double value = 0.0;
    bool perfect_separation = false;
    double trace_between = 0.0;
    double trace_within = 0.0;
};

/// Strict ordering used for model selection: perfect separation beats any
/// finite score.
bool better_than(const ChScore& a, const ChScore& b) noexcept;

/// S = tr(B) / tr(W) * (n - k) / (k - 1) over the rows of `points`.
/// Throws DegenerateK (k < 2), EmptyCluster, or InvalidArgument (n <= k,
/// labels out of range).
ChScore ch_score(const Eigen::MatrixXd& points, const std::vector<int>& labels, int k);

struct CandidateScore {
    int k = 0;
    std::optional<ChScore> score;  // empty when this k failed
    std::string failure;
};

struct Selection {
    ClusterResult best;
    ChScore best_score;
    std::vector<CandidateScore> candidates;  // ascending k
};

/// Clusters for every k in [k_min, k_max] and keeps the highest CH score,
/// computed on the pixel feature vectors. Ties go to the smaller k.
/// IsolatedVertex and EigFailure propagate; AllDegenerate when no k succeeds.
Selection select_best_k(const AffinityMap& a, const FeatureMap& f, int k_min, int k_max, const SpectralConfig& cfg);

struct CentralityEntry {
    int cluster_id = 0;
    double d_q = 0.0;
    std::size_t pixel_count = 0;

    bool operator==(const CentralityEntry&) const = default;
};

/// Sorted ascending by d_q, ties by cluster id.
struct CentralityRanking {
    std::vector<CentralityEntry> entries;
};

/// Mean Euclidean distance of each cluster's pixel centres (row + 0.5, col + 0.5)
/// to the image centre (h / 2, w / 2). Clusters absent from the map are not listed.
CentralityRanking centrality_rank(const std::vector<int>& label_map, std::uint32_t image_h, std::uint32_t image_w);

/// First t ranked clusters whose size lies in [min_frac, max_frac] * total_pixels.
std::vector<int> pick_top_t(const CentralityRanking& ranking, int t, double min_frac, double max_frac,
                            std::size_t total_pixels);

}  // namespace ipe
