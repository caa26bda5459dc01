#include "ipe/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ipe/error.hpp"

namespace ipe {

bool better_than(const ChScore& a, const ChScore& b) noexcept {
    if (a.perfect_separation != b.perfect_separation) return a.perfect_separation;
    if (a.perfect_separation) return false;
    return a.value > b.value;
}

ChScore ch_score(const Eigen::MatrixXd& points, const std::vector<int>& labels, int k) {
    if (k < 2) throw Error(ErrorCode::DegenerateK, "k = " + std::to_string(k));
    const Eigen::Index n = points.rows();
    if (static_cast<std::size_t>(n) != labels.size())
        throw Error(ErrorCode::DimMismatch, "labels and points differ in length");
    if (n <= k) throw Error(ErrorCode::InvalidArgument, "CH score requires more points than clusters");

    Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int l = labels[static_cast<std::size_t>(i)];
        if (l < 0 || l >= k) throw Error(ErrorCode::InvalidArgument, "label out of range");
        centers.row(l) += points.row(i);
        ++counts[static_cast<std::size_t>(l)];
    }
    for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0) throw Error(ErrorCode::EmptyCluster, "cluster " + std::to_string(c));
        centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
    const Eigen::RowVectorXd grand = points.colwise().mean();

    ChScore s;
    for (Eigen::Index i = 0; i < n; ++i)
        s.trace_within += (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    for (int c = 0; c < k; ++c)
        s.trace_between += static_cast<double>(counts[static_cast<std::size_t>(c)]) * (centers.row(c) - grand).squaredNorm();

    if (s.trace_within == 0.0) {
        s.perfect_separation = true;
        s.value = std::numeric_limits<double>::infinity();
    } else {
        s.value = (s.trace_between / s.trace_within) * static_cast<double>(n - k) / static_cast<double>(k - 1);
    }
    return s;
}

Selection select_best_k(const AffinityMap& a, const FeatureMap& f, int k_min, int k_max, const SpectralConfig& cfg) {
    if (k_min < 2 || k_min > k_max) throw Error(ErrorCode::InvalidArgument, "require 2 <= m <= n");
    if (k_max >= a.size()) throw Error(ErrorCode::InvalidArgument, "cluster count must be below the pixel count");
    if (std::size_t{f.height} * f.width != static_cast<std::size_t>(a.size()))
        throw Error(ErrorCode::DimMismatch, "feature map does not match affinity map");

    const auto spectrum = laplacian_spectrum(build_similarity(a), cfg);
    const Eigen::MatrixXd features = pixel_features(f);

    Selection sel;
    bool have_best = false;
    for (int k = k_min; k <= k_max; ++k) {
        CandidateScore cand{k, std::nullopt, {}};
        try {
            auto clusters = cluster_spectrum(spectrum, k, a.grid_h, a.grid_w, cfg);
            const auto score = ch_score(features, clusters.labels, k);
            cand.score = score;
            if (!have_best || better_than(score, sel.best_score)) {
                sel.best = std::move(clusters);
                sel.best_score = score;
                have_best = true;
            }
        } catch (const Error& e) {
            cand.failure = e.what();
        }
        sel.candidates.push_back(std::move(cand));
    }
    if (!have_best) throw Error(ErrorCode::AllDegenerate, "no cluster count in range produced a valid clustering");
    return sel;
}

CentralityRanking centrality_rank(const std::vector<int>& label_map, std::uint32_t image_h, std::uint32_t image_w) {
    if (label_map.empty() || label_map.size() != std::size_t{image_h} * image_w)
        throw Error(ErrorCode::DimMismatch, "label map does not match image dims");
    const double cy = image_h / 2.0;
    const double cx = image_w / 2.0;
    std::vector<double> sums;
    std::vector<std::size_t> counts;
    for (std::uint32_t y = 0; y < image_h; ++y) {
        const double dy = y + 0.5 - cy;
        for (std::uint32_t x = 0; x < image_w; ++x) {
            const int l = label_map[std::size_t{y} * image_w + x];
            if (l < 0) throw Error(ErrorCode::InvalidArgument, "negative cluster id");
            const auto idx = static_cast<std::size_t>(l);
            if (idx >= sums.size()) {
                sums.resize(idx + 1, 0.0);
                counts.resize(idx + 1, 0);
            }
            const double dx = x + 0.5 - cx;
            sums[idx] += std::sqrt(dx * dx + dy * dy);
            ++counts[idx];
        }
    }
    CentralityRanking r;
    for (std::size_t c = 0; c < sums.size(); ++c) {
        if (counts[c] == 0) continue;
        r.entries.push_back({static_cast<int>(c), sums[c] / static_cast<double>(counts[c]), counts[c]});
    }
    std::sort(r.entries.begin(), r.entries.end(), [](const CentralityEntry& a, const CentralityEntry& b) {
        return a.d_q != b.d_q ? a.d_q < b.d_q : a.cluster_id < b.cluster_id;
    });
    return r;
}

std::vector<int> pick_top_t(const CentralityRanking& ranking, int t, double min_frac, double max_frac,
                            std::size_t total_pixels) {
    if (t < 1) throw Error(ErrorCode::InvalidArgument, "t must be >= 1");
    std::vector<int> picked;
    const double lo = min_frac * static_cast<double>(total_pixels);
    const double hi = max_frac * static_cast<double>(total_pixels);
    for (const auto& e : ranking.entries) {
        if (static_cast<int>(picked.size()) >= t) break;
        const auto size = static_cast<double>(e.pixel_count);
        if (size >= lo && size <= hi) picked.push_back(e.cluster_id);
    }
    return picked;
}

}  // namespace ipe
