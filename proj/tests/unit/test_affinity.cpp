#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ipe/affinity.hpp"
#include "ipe/error.hpp"
#include "oracles.hpp"

namespace ipe {
namespace {

double max_abs_diff(const AffinityMap& a, const std::vector<std::vector<double>>& ref) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < a.size(); ++j)
            worst = std::max(worst, std::abs(a.values(i, j) - ref[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
    return worst;
}

TEST(Affinity, IdenticalVectorsGiveAllOnes) {
    FeatureMap f{3, 2, 2, {}};
    for (std::uint32_t ch = 0; ch < 3; ++ch)
        for (int p = 0; p < 4; ++p) f.data.push_back(static_cast<float>(ch + 1));
    const auto a = compute_affinity(f);
    EXPECT_TRUE(a.values.isApproxToConstant(1.0, 1e-12));
}

TEST(Affinity, OrthogonalPixels) {
    const FeatureMap f{2, 1, 2, {1.0f, 0.0f, 0.0f, 1.0f}};
    const auto a = compute_affinity(f);
    EXPECT_EQ(a.values(0, 1), 0.0);
    EXPECT_EQ(a.values(1, 0), 0.0);
    EXPECT_DOUBLE_EQ(a.values(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(a.values(1, 1), 1.0);
}

TEST(Affinity, MatchesBruteForce3x3) {
    Rng rng(3);
    const auto f = testing::random_feature_map(rng, 8, 3, 3);
    EXPECT_LE(max_abs_diff(compute_affinity(f), testing::brute_affinity(f)), 1e-6);
}

TEST(Affinity, RowMajorFlattening) {
    // Pixel (y=1, x=0) of a 2x2 grid is index 2.
    FeatureMap f{2, 2, 2, {1, 1, 0, 1, 0, 0, 1, 0}};
    const auto a = compute_affinity(f);
    EXPECT_NEAR(a.values(0, 2), 0.0, 1e-15);  // (1,0) vs (0,1)
    EXPECT_NEAR(a.values(0, 1), 1.0, 1e-15);
}

TEST(Affinity, Invariants) {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const auto f = testing::random_feature_map(rng, 5, 4, 5);
        const auto a = compute_affinity(f);
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            EXPECT_NEAR(a.values(i, i), 1.0, 1e-6);
            for (Eigen::Index j = 0; j < a.size(); ++j) {
                EXPECT_LE(std::abs(a.values(i, j) - a.values(j, i)), 1e-6);
                EXPECT_LE(std::abs(a.values(i, j)), 1.0 + 1e-6);
            }
        }
    }
}

TEST(Affinity, ScaleInvariance) {
    Rng rng(23);
    auto f = testing::random_feature_map(rng, 6, 3, 4);
    const auto before = compute_affinity(f);
    const std::size_t n = f.pixel_count();
    for (std::size_t px = 0; px < n; ++px) {
        const float lambda = static_cast<float>(0.01 + 100.0 * rng.uniform());
        for (std::uint32_t ch = 0; ch < f.channels; ++ch) f.data[ch * n + px] *= lambda;
    }
    EXPECT_LE((compute_affinity(f).values - before.values).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Affinity, ChannelPermutationIsExact) {
    Rng rng(29);
    const auto f = testing::random_feature_map(rng, 16, 4, 4);
    const auto before = compute_affinity(f);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<std::uint32_t> perm(f.channels);
        std::iota(perm.begin(), perm.end(), 0u);
        for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        FeatureMap g = f;
        const std::size_t n = f.pixel_count();
        for (std::uint32_t ch = 0; ch < f.channels; ++ch)
            std::copy_n(f.data.begin() + static_cast<std::ptrdiff_t>(perm[ch] * n), n,
                        g.data.begin() + static_cast<std::ptrdiff_t>(ch * n));
        EXPECT_TRUE(compute_affinity(g).values == before.values);
    }
}

TEST(Affinity, ExactDotIsOrderIndependent) {
    Rng rng(31);
    std::vector<float> a(100), b(100);
    for (auto& v : a) v = static_cast<float>((rng.uniform() - 0.5) * std::pow(2.0, static_cast<int>(rng.below(40)) - 20));
    for (auto& v : b) v = static_cast<float>((rng.uniform() - 0.5) * std::pow(2.0, static_cast<int>(rng.below(40)) - 20));
    const double forward = exact_dot(a, b);
    std::reverse(a.begin(), a.end());
    std::reverse(b.begin(), b.end());
    EXPECT_EQ(exact_dot(a, b), forward);
    long double ref = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ref += static_cast<long double>(a[i]) * b[i];
    EXPECT_NEAR(forward, static_cast<double>(ref), 1e-12 * std::abs(static_cast<double>(ref)) + 1e-300);
}

TEST(Affinity, ExactDotCancellation) {
    const std::vector<float> a = {1e30f, 1.0f, -1e30f};
    const std::vector<float> b = {1e30f, 1.0f, 1e30f};
    EXPECT_EQ(exact_dot(a, b), 1.0);
}

TEST(Affinity, WorkerCountDoesNotChangeResult) {
    Rng rng(37);
    const auto f = testing::random_feature_map(rng, 8, 7, 7);
    EXPECT_TRUE(compute_affinity(f, 1).values == compute_affinity(f, 4).values);
}

TEST(Affinity, ZeroNormPixel) {
    FeatureMap f{2, 1, 3, {1, 0, 1, 1, 0, 1}};
    try {
        compute_affinity(f);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroNormPixel);
        EXPECT_NE(std::string(e.what()).find('1'), std::string::npos);
    }
}

}  // namespace
}  // namespace ipe
