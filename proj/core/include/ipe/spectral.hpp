#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ipe/affinity.hpp"

namespace ipe {

/// Partition of the feature grid. labels are row-major over grid_h x grid_w,
/// values in [0, k), and every id occurs at least once. Ids are numbered in
/// order of first appearance.
struct ClusterResult {
    int k = 0;
    std::vector<int> labels;
    std::uint32_t grid_h = 0;
    std::uint32_t grid_w = 0;

    bool operator==(const ClusterResult&) const = default;
};

struct SpectralConfig {
    double eig_tol = 1e-8;
    int kmeans_restarts = 10;
    int kmeans_max_iter = 300;
    std::uint64_t seed = 0;

    bool operator==(const SpectralConfig&) const = default;
};

void validate(const SpectralConfig& cfg);

/// W[i][j] = max(A[i][j], 0) with a zero diagonal. Throws IsolatedVertex if a
/// row sums to zero.
Eigen::MatrixXd build_similarity(const AffinityMap& a);

/// Full eigendecomposition of L_sym = I - D^-1/2 W D^-1/2, eigenvalues ascending.
struct LaplacianSpectrum {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;  // column i pairs with eigenvalues(i)
};

/// Throws EigFailure when the solver does not converge or the spectrum
/// violates L_sym properties by more than cfg.eig_tol.
LaplacianSpectrum laplacian_spectrum(const Eigen::MatrixXd& w, const SpectralConfig& cfg = {});

/// First k eigenvectors as columns, each row rescaled to unit length (zero rows stay zero).
Eigen::MatrixXd embed(const LaplacianSpectrum& spectrum, int k);

/// laplacian_spectrum followed by embed. Requires 2 <= k < n.
Eigen::MatrixXd spectral_embed(const Eigen::MatrixXd& w, int k, const SpectralConfig& cfg = {});

struct KMeansResult {
    std::vector<int> labels;
    Eigen::MatrixXd centers;  // k x d
    double wcss = 0.0;
    int restart = 0;  // index of the winning restart
};

/// Lloyd's algorithm with k-means++ seeding; best of cfg.kmeans_restarts by
/// within-cluster sum of squares (ties to the lower restart index).
/// Deterministic in cfg.seed. Requires rows >= k >= 1.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, const SpectralConfig& cfg);

/// k-means over the row-normalised embedding of an already computed spectrum.
ClusterResult cluster_spectrum(const LaplacianSpectrum& spectrum, int k, std::uint32_t grid_h, std::uint32_t grid_w,
                               const SpectralConfig& cfg);

ClusterResult spectral_cluster(const AffinityMap& a, int k, const SpectralConfig& cfg);

/// Renumbers labels in order of first appearance.
std::vector<int> canonical_labels(const std::vector<int>& labels);

}  // namespace ipe
