#pragma once

// Reference implementations written from the definitions, sharing no code
// with the library. Slow on purpose.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ipe/crf.hpp"
#include "ipe/feature_io.hpp"
#include "ipe/random.hpp"

namespace ipe::testing {

struct DenseEigen {
    std::vector<double> values;                // ascending
    std::vector<std::vector<double>> vectors;  // vectors[i] pairs with values[i]
};

/// Cyclic Jacobi rotations on a symmetric matrix (row-major).
DenseEigen jacobi_eigen(std::vector<std::vector<double>> a, double tol = 1e-14, int max_sweeps = 100);

/// Adjusted Rand index from the contingency table.
double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b);

/// Plain double loop over all pairs with long double accumulation.
std::vector<std::vector<double>> brute_affinity(const FeatureMap& f);

/// tr(B) / tr(W) * (n - k) / (k - 1) built from explicit d x d scatter matrices.
double literal_ch(const std::vector<std::vector<double>>& points, const std::vector<int>& labels, int k);

/// Mean distance of each cluster's pixel centres to the image centre, indexed by cluster id.
std::vector<double> brute_dq(const std::vector<int>& labels, int h, int w, int k);

/// Normalized pairwise messages by summing every ordered pixel pair.
std::vector<double> brute_messages(const ImageBuffer& img, const UnaryField& q, const CrfParams& p);

/// One mean-field step: Potts penalty from brute_messages, then softmax with the log unary.
UnaryField brute_mean_field_step(const ImageBuffer& img, const UnaryField& unary, const UnaryField& q,
                                 const CrfParams& p);

FeatureMap random_feature_map(Rng& rng, std::uint32_t c, std::uint32_t h, std::uint32_t w);
ImageBuffer random_image(Rng& rng, std::uint32_t h, std::uint32_t w);
UnaryField random_unary(Rng& rng, std::uint32_t h, std::uint32_t w, int k);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Every regular file under root, as (relative path, bytes), sorted.
std::vector<std::pair<std::string, std::string>> snapshot_tree(const std::filesystem::path& root);

}  // namespace ipe::testing
