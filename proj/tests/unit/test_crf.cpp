#include <gtest/gtest.h>

#include <cmath>

#include "ipe/crf.hpp"
#include "ipe/error.hpp"
#include "oracles.hpp"

namespace ipe {
namespace {

using testing::random_image;
using testing::random_unary;

double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

CrfParams small_params() {
    // Bandwidths comparable to a tiny image so both kernels matter.
    CrfParams p;
    p.theta_alpha = 3.0;
    p.theta_beta = 40.0;
    p.theta_gamma = 1.5;
    return p;
}

TEST(Upsample, TwoByTwoToFourByFour) {
    const ClusterResult c{2, {0, 1, 1, 0}, 2, 2};
    const std::vector<int> expected = {0, 0, 1, 1, 0, 0, 1, 1, 1, 1, 0, 0, 1, 1, 0, 0};
    EXPECT_EQ(upsample_labels(c, 4, 4), expected);
}

TEST(Upsample, SameSizeIsIdentity) {
    const ClusterResult c{3, {0, 1, 2, 2, 1, 0}, 2, 3};
    EXPECT_EQ(upsample_labels(c, 2, 3), c.labels);
}

TEST(Upsample, BlockBoundariesAtMultiplesOf32) {
    ClusterResult c{2, std::vector<int>(441), 21, 21};
    for (int i = 0; i < 441; ++i) c.labels[static_cast<std::size_t>(i)] = i % 2;  // oracle: grid index parity
    const auto up = upsample_labels(c, 672, 672);
    for (int y = 0; y < 672; y += 7)
        for (int x = 0; x < 672; ++x)
            ASSERT_EQ(up[static_cast<std::size_t>(y * 672 + x)], ((y / 32) * 21 + x / 32) % 2) << y << "," << x;
}

TEST(Upsample, RejectsSmallerImage) { EXPECT_THROW(upsample_labels(ClusterResult{2, {0, 1, 0, 1}, 2, 2}, 1, 2), Error); }

TEST(Unary, ZeroEpsIsOneHot) {
    const auto u = labels_to_unary({0, 2, 1}, 1, 3, 3, 0.0);
    EXPECT_EQ(u.probs, (std::vector<double>{1, 0, 0, 0, 0, 1, 0, 1, 0}));
}

TEST(Unary, TwoClassSmoothing) {
    const auto u = labels_to_unary({0, 1}, 1, 2, 2, 0.1);
    EXPECT_EQ(u.probs, (std::vector<double>{0.9, 0.1, 0.1, 0.9}));
}

TEST(Unary, RowsSumToOne) {
    for (int k = 2; k <= 6; ++k) {
        for (double eps : {0.0, 0.1, 0.25, 0.5}) {
            std::vector<int> labels;
            for (int l = 0; l < k; ++l) labels.push_back(l);
            const auto u = labels_to_unary(labels, 1, static_cast<std::uint32_t>(k), k, eps);
            for (std::size_t p = 0; p < u.pixel_count(); ++p) {
                double sum = 0.0;
                for (int l = 0; l < k; ++l) sum += u.prob(p, l);
                EXPECT_NEAR(sum, 1.0, 1e-15) << "k=" << k << " eps=" << eps;
            }
        }
    }
}

TEST(Argmax, TiesGoToSmallerId) {
    UnaryField u{3, 1, 2, {0.4, 0.4, 0.2, 0.2, 0.4, 0.4}};
    EXPECT_EQ(argmax_labels(u), (std::vector<int>{0, 1}));
}

TEST(MeanField, ZeroPairwiseKeepsUnaryArgmax) {
    Rng rng(1);
    CrfParams p;
    p.w_appearance = 0.0;
    p.w_smoothness = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto h = 1 + static_cast<std::uint32_t>(rng.below(12));
        const auto w = 1 + static_cast<std::uint32_t>(rng.below(12));
        const int k = 2 + static_cast<int>(rng.below(4));
        const auto u = random_unary(rng, h, w, k);
        const auto r = mean_field_refine(random_image(rng, h, w), u, p);
        EXPECT_EQ(r.labels, argmax_labels(u));
    }
}

TEST(MeanField, NormalizedAfterEveryIteration) {
    Rng rng(2);
    for (auto filter : {CrfFilter::Exact, CrfFilter::Approximate}) {
        for (int trial = 0; trial < 4; ++trial) {
            const std::uint32_t side = filter == CrfFilter::Exact ? 12 : 72;
            const int k = 2 + trial;
            CrfParams p;
            p.filter = filter;
            p.iterations = 5;
            int calls = 0;
            mean_field_refine(random_image(rng, side, side), random_unary(rng, side, side, k), p,
                              [&](int it, const UnaryField& q) {
                                  EXPECT_EQ(it, ++calls);
                                  for (std::size_t px = 0; px < q.pixel_count(); ++px) {
                                      double sum = 0.0;
                                      for (int l = 0; l < k; ++l) {
                                          ASSERT_GE(q.prob(px, l), 0.0);
                                          sum += q.prob(px, l);
                                      }
                                      ASSERT_NEAR(sum, 1.0, 1e-6);
                                  }
                              });
            EXPECT_EQ(calls, 5);
        }
    }
}

TEST(MeanField, MessagesMatchBruteForce) {
    Rng rng(3);
    for (std::uint32_t side : {6u, 8u}) {
        for (int k : {2, 3}) {
            const auto img = random_image(rng, side, side);
            const auto q = random_unary(rng, side, side, k);
            for (const auto& p : {CrfParams{}, small_params()})
                EXPECT_LE(max_abs(pairwise_messages(img, q, p), testing::brute_messages(img, q, p)), 1e-9);
        }
    }
}

TEST(MeanField, OneIterationMatchesBruteForce6x6) {
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const auto img = random_image(rng, 6, 6);
        const auto u = random_unary(rng, 6, 6, 2);
        for (auto p : {CrfParams{}, small_params()}) {
            p.iterations = 1;
            const auto r = mean_field_refine(img, u, p);
            EXPECT_LE(max_abs(r.field.probs, testing::brute_mean_field_step(img, u, u, p).probs), 1e-6);
        }
    }
}

TEST(MeanField, SeveralIterationsMatchBruteForce) {
    Rng rng(5);
    const auto img = random_image(rng, 7, 5);
    const auto u = random_unary(rng, 7, 5, 3);
    auto p = small_params();
    p.iterations = 4;
    auto q = u;
    for (int it = 0; it < 4; ++it) q = testing::brute_mean_field_step(img, u, q, p);
    EXPECT_LE(max_abs(mean_field_refine(img, u, p).field.probs, q.probs), 1e-9);
}

TEST(MeanField, MirrorSymmetryOnConstantImage) {
    const std::uint32_t h = 5, w = 8;
    ImageBuffer img(h, w);
    for (auto& v : img.pixels) v = 120;
    UnaryField u{2, h, w, std::vector<double>(std::size_t{h} * w * 2)};
    Rng rng(6);
    for (std::uint32_t y = 0; y < h; ++y) {
        for (std::uint32_t x = 0; x < w / 2; ++x) {
            const double a = 0.05 + 0.9 * rng.uniform();
            const std::size_t left = std::size_t{y} * w + x;
            const std::size_t right = std::size_t{y} * w + (w - 1 - x);
            u.probs[left * 2] = a;
            u.probs[left * 2 + 1] = 1.0 - a;
            u.probs[right * 2] = 1.0 - a;  // mirrored with classes swapped
            u.probs[right * 2 + 1] = a;
        }
    }
    auto p = small_params();
    const auto r = mean_field_refine(img, u, p);
    for (std::uint32_t y = 0; y < h; ++y)
        for (std::uint32_t x = 0; x < w; ++x) {
            const std::size_t a = std::size_t{y} * w + x;
            const std::size_t b = std::size_t{y} * w + (w - 1 - x);
            EXPECT_NEAR(r.field.probs[a * 2], r.field.probs[b * 2 + 1], 1e-12);
        }
}

TEST(MeanField, WorkerCountAndRepeatsAreBitIdentical) {
    Rng rng(7);
    for (auto filter : {CrfFilter::Exact, CrfFilter::Approximate}) {
        const std::uint32_t side = filter == CrfFilter::Exact ? 20 : 70;
        const auto img = random_image(rng, side, side);
        const auto u = random_unary(rng, side, side, 3);
        CrfParams p;
        p.filter = filter;
        p.iterations = 3;
        const auto serial = mean_field_refine(img, u, p);
        p.workers = 5;
        const auto parallel = mean_field_refine(img, u, p);
        EXPECT_EQ(serial.field.probs, parallel.field.probs);
        EXPECT_EQ(serial.labels, parallel.labels);
        EXPECT_EQ(mean_field_refine(img, u, p).field.probs, parallel.field.probs);
    }
}

TEST(MeanField, ApproximateFilterTracksExact) {
    // Smooth two-region image: the lattice approximation should stay close to
    // the exact sums at the default bandwidths.
    const std::uint32_t side = 48;
    ImageBuffer img(side, side);
    for (std::uint32_t y = 0; y < side; ++y)
        for (std::uint32_t x = 0; x < side; ++x) {
            std::uint8_t* px = img.px(y, x);
            px[0] = x < side / 2 ? 200 : 30;
            px[1] = 90;
            px[2] = static_cast<std::uint8_t>(y * 2);
        }
    Rng rng(8);
    const auto q = random_unary(rng, side, side, 2);
    CrfParams exact;
    exact.filter = CrfFilter::Exact;
    CrfParams approx = exact;
    approx.filter = CrfFilter::Approximate;
    const auto me = pairwise_messages(img, q, exact);
    const auto ma = pairwise_messages(img, q, approx);
    const double scale = exact.w_appearance + exact.w_smoothness;
    EXPECT_LE(max_abs(me, ma) / scale, 0.05);
}

TEST(MeanField, PairwiseTermPullsTowardNeighbours) {
    // A lone pixel disagreeing with a uniform neighbourhood flips.
    const std::uint32_t side = 9;
    ImageBuffer img(side, side);
    for (auto& v : img.pixels) v = 100;
    std::vector<int> labels(side * side, 0);
    labels[4 * side + 4] = 1;
    const auto u = labels_to_unary(labels, side, side, 2, 0.3);
    const auto r = mean_field_refine(img, u, CrfParams{});
    EXPECT_EQ(r.labels[4 * side + 4], 0);
}

TEST(MeanField, RejectsMismatchedDims) {
    Rng rng(9);
    EXPECT_THROW(mean_field_refine(random_image(rng, 4, 4), random_unary(rng, 4, 5, 2), CrfParams{}), Error);
}

TEST(CrfParams, Validation) {
    CrfParams p;
    p.iterations = 0;
    EXPECT_THROW(validate(p), Error);
    p = CrfParams{};
    p.theta_beta = 0.0;
    EXPECT_THROW(validate(p), Error);
    p = CrfParams{};
    p.w_appearance = -1.0;
    EXPECT_THROW(validate(p), Error);
    EXPECT_NO_THROW(validate(CrfParams{}));
}

}  // namespace
}  // namespace ipe
