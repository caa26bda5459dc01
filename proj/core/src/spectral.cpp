#include "ipe/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <string>

#include "ipe/error.hpp"
#include "ipe/random.hpp"

namespace ipe {

namespace {

double squared_distance(const Eigen::MatrixXd& points, Eigen::Index row, const Eigen::MatrixXd& centers,
                        Eigen::Index c) {
    return (points.row(row) - centers.row(c)).squaredNorm();
}

std::vector<Eigen::Index> kmeanspp_seeds(const Eigen::MatrixXd& points, int k, Rng& rng) {
    const Eigen::Index n = points.rows();
    std::vector<Eigen::Index> chosen;
    chosen.reserve(static_cast<std::size_t>(k));
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    std::vector<double> min_d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());

    auto take = [&](Eigen::Index idx) {
        chosen.push_back(idx);
        taken[static_cast<std::size_t>(idx)] = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d2 = (points.row(i) - points.row(idx)).squaredNorm();
            auto& slot = min_d2[static_cast<std::size_t>(i)];
            if (d2 < slot) slot = d2;
        }
    };

    take(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
    while (static_cast<int>(chosen.size()) < k) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!taken[static_cast<std::size_t>(i)]) total += min_d2[static_cast<std::size_t>(i)];
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cumulative = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (taken[static_cast<std::size_t>(i)] || min_d2[static_cast<std::size_t>(i)] <= 0.0) continue;
                cumulative += min_d2[static_cast<std::size_t>(i)];
                pick = i;
                if (cumulative > target) break;
            }
        }
        if (pick < 0) {
            // All remaining points coincide with a chosen center.
            for (Eigen::Index i = 0; i < n && pick < 0; ++i)
                if (!taken[static_cast<std::size_t>(i)]) pick = i;
        }
        take(pick);
    }
    return chosen;
}

struct LloydState {
    std::vector<int> labels;
    Eigen::MatrixXd centers;
    double wcss = 0.0;
};

LloydState lloyd(const Eigen::MatrixXd& points, int k, const std::vector<Eigen::Index>& seeds, int max_iter) {
    const Eigen::Index n = points.rows();
    LloydState s;
    s.centers.resize(k, points.cols());
    for (int c = 0; c < k; ++c) s.centers.row(c) = points.row(seeds[static_cast<std::size_t>(c)]);
    s.labels.assign(static_cast<std::size_t>(n), -1);
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k));

    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d2 = squared_distance(points, i, s.centers, 0);
            for (int c = 1; c < k; ++c) {
                const double d2 = squared_distance(points, i, s.centers, c);
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = c;
                }
            }
            if (s.labels[static_cast<std::size_t>(i)] != best) {
                s.labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }

        // Repair empty clusters by moving in the point farthest from its center.
        for (;;) {
            std::fill(counts.begin(), counts.end(), 0);
            for (int l : s.labels) ++counts[static_cast<std::size_t>(l)];
            int empty = -1;
            for (int c = 0; c < k && empty < 0; ++c)
                if (counts[static_cast<std::size_t>(c)] == 0) empty = c;
            if (empty < 0) break;
            Eigen::Index farthest = -1;
            double far_d2 = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int l = s.labels[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(l)] < 2) continue;
                const double d2 = squared_distance(points, i, s.centers, l);
                if (d2 > far_d2) {
                    far_d2 = d2;
                    farthest = i;
                }
            }
            s.labels[static_cast<std::size_t>(farthest)] = empty;
            s.centers.row(empty) = points.row(farthest);
            changed = true;
        }

        s.centers.setZero();
        for (Eigen::Index i = 0; i < n; ++i) s.centers.row(s.labels[static_cast<std::size_t>(i)]) += points.row(i);
        for (int c = 0; c < k; ++c) s.centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);

        if (!changed) break;
    }

    s.wcss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s.wcss += squared_distance(points, i, s.centers, s.labels[static_cast<std::size_t>(i)]);
    return s;
}

}  // namespace

void validate(const SpectralConfig& cfg) {
    if (!(cfg.eig_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "eig_tol must be positive");
    if (cfg.kmeans_restarts < 1 || cfg.kmeans_max_iter < 1)
        throw Error(ErrorCode::InvalidArgument, "k-means restarts and iterations must be >= 1");
}

Eigen::MatrixXd build_similarity(const AffinityMap& a) {
    Eigen::MatrixXd w = a.values.cwiseMax(0.0);
    w.diagonal().setZero();
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        if (!(w.row(i).sum() > 0.0)) throw Error(ErrorCode::IsolatedVertex, "vertex " + std::to_string(i));
    }
    return w;
}

LaplacianSpectrum laplacian_spectrum(const Eigen::MatrixXd& w, const SpectralConfig& cfg) {
    validate(cfg);
    const Eigen::Index n = w.rows();
    if (n != w.cols() || n < 2) throw Error(ErrorCode::InvalidArgument, "similarity matrix must be square, n >= 2");
    Eigen::VectorXd inv_sqrt_degree(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = w.row(i).sum();
        if (!(d > 0.0)) throw Error(ErrorCode::IsolatedVertex, "vertex " + std::to_string(i));
        inv_sqrt_degree(i) = 1.0 / std::sqrt(d);
    }
    Eigen::MatrixXd laplacian = -(inv_sqrt_degree.asDiagonal() * w * inv_sqrt_degree.asDiagonal());
    laplacian.diagonal().array() += 1.0;
    // Symmetrise exactly so the solver sees a bit-symmetric input.
    laplacian = (0.5 * (laplacian + laplacian.transpose())).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::EigFailure, "eigensolver did not converge");
    LaplacianSpectrum out{solver.eigenvalues(), solver.eigenvectors()};
    const double residual =
        (laplacian * out.eigenvectors - out.eigenvectors * out.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff();
    if (!(residual <= cfg.eig_tol))
        throw Error(ErrorCode::EigFailure, "eigen residual " + std::to_string(residual) + " exceeds tolerance");
    return out;
}

Eigen::MatrixXd embed(const LaplacianSpectrum& spectrum, int k) {
    const Eigen::Index n = spectrum.eigenvectors.rows();
    if (k < 1 || k > n) throw Error(ErrorCode::InvalidArgument, "embedding dimension out of range");
    Eigen::MatrixXd e = spectrum.eigenvectors.leftCols(k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double norm = e.row(i).norm();
        if (norm > 1e-15) e.row(i) /= norm;
        else e.row(i).setZero();
    }
    return e;
}

Eigen::MatrixXd spectral_embed(const Eigen::MatrixXd& w, int k, const SpectralConfig& cfg) {
    if (k < 2 || k >= w.rows()) throw Error(ErrorCode::InvalidArgument, "spectral_embed requires 2 <= k < n");
    return embed(laplacian_spectrum(w, cfg), k);
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, const SpectralConfig& cfg) {
    validate(cfg);
    if (k < 1 || points.rows() < k) throw Error(ErrorCode::InvalidArgument, "k-means requires rows >= k >= 1");
    KMeansResult best;
    best.wcss = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.kmeans_restarts; ++r) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));
        const auto seeds = kmeanspp_seeds(points, k, rng);
        auto state = lloyd(points, k, seeds, cfg.kmeans_max_iter);
        if (state.wcss < best.wcss) {
            best.labels = std::move(state.labels);
            best.centers = std::move(state.centers);
            best.wcss = state.wcss;
            best.restart = r;
        }
    }
    return best;
}

std::vector<int> canonical_labels(const std::vector<int>& labels) {
    std::vector<int> remap;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto l = static_cast<std::size_t>(labels[i]);
        if (l >= remap.size()) remap.resize(l + 1, -1);
        if (remap[l] < 0) {
            int next = 0;
            for (int v : remap) next += v >= 0;
            remap[l] = next;
        }
        out[i] = remap[l];
    }
    return out;
}

ClusterResult cluster_spectrum(const LaplacianSpectrum& spectrum, int k, std::uint32_t grid_h, std::uint32_t grid_w,
                               const SpectralConfig& cfg) {
    const Eigen::Index n = spectrum.eigenvectors.rows();
    if (k < 2 || k >= n) throw Error(ErrorCode::InvalidArgument, "spectral clustering requires 2 <= k < n");
    if (std::size_t{grid_h} * grid_w != static_cast<std::size_t>(n))
        throw Error(ErrorCode::DimMismatch, "grid dims do not match affinity size");
    const auto result = kmeans(embed(spectrum, k), k, cfg);
    return ClusterResult{k, canonical_labels(result.labels), grid_h, grid_w};
}

ClusterResult spectral_cluster(const AffinityMap& a, int k, const SpectralConfig& cfg) {
    if (k < 2 || k >= a.size()) throw Error(ErrorCode::InvalidArgument, "spectral clustering requires 2 <= k < n");
    return cluster_spectrum(laplacian_spectrum(build_similarity(a), cfg), k, a.grid_h, a.grid_w, cfg);
}

}  // namespace ipe
