#include "ipe/affinity.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <string>
#include <vector>

#include "ipe/error.hpp"
#include "ipe/parallel.hpp"

namespace ipe {

namespace {

// A float as signed integer mantissa times 2^exponent.
struct SplitFloat {
    std::int32_t mantissa;
    std::int32_t exponent;
};

SplitFloat split(float v) noexcept {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    const auto biased = static_cast<std::int32_t>((bits >> 23) & 0xFFu);
    auto m = static_cast<std::int32_t>(bits & 0x7FFFFFu);
    std::int32_t e = -149;
    if (biased != 0) {
        m |= 0x800000;
        e = biased - 150;
    }
    return {(bits >> 31) ? -m : m, e};
}

// Fixed-point register wide enough for any sum of float*float products
// (bit weights 2^-298 .. 2^300). Limbs hold 32 bits each with deferred carries,
// so up to 2^31 terms can be added before the register can overflow.
class ExactAccumulator {
public:
    static constexpr int kOffset = 298;
    static constexpr int kLimbs = 20;

    void add(const SplitFloat& a, const SplitFloat& b) noexcept {
        const std::int64_t product = std::int64_t{a.mantissa} * b.mantissa;
        if (product == 0) return;
        const int pos = a.exponent + b.exponent + kOffset;
        const int limb = pos >> 5;
        const __int128 v = static_cast<__int128>(product) << (pos & 31);
        const __int128 rest = v >> 32;
        limbs_[limb] += static_cast<std::int64_t>(v & 0xFFFFFFFF);
        limbs_[limb + 1] += static_cast<std::int64_t>(rest & 0xFFFFFFFF);
        limbs_[limb + 2] += static_cast<std::int64_t>(rest >> 32);
    }

    double value() const noexcept {
        auto limbs = limbs_;
        normalize(limbs);
        bool negative = limbs[kLimbs - 1] < 0;
        if (negative) {
            for (auto& l : limbs) l = -l;
            normalize(limbs);
        }
        int top = kLimbs - 1;
        while (top >= 0 && limbs[top] == 0) --top;
        if (top < 0) return 0.0;
        auto limb_at = [&](int i) -> unsigned __int128 {
            return i >= 0 ? static_cast<unsigned __int128>(static_cast<std::uint64_t>(limbs[i])) : 0;
        };
        unsigned __int128 mant = (limb_at(top) << 64) | (limb_at(top - 1) << 32) | limb_at(top - 2);
        for (int i = top - 3; i >= 0; --i) {
            if (limbs[i] != 0) {
                mant |= 1;  // sticky bit keeps round-to-nearest correct
                break;
            }
        }
        const double magnitude = std::ldexp(static_cast<double>(mant), 32 * (top - 2) - kOffset);
        return negative ? -magnitude : magnitude;
    }

private:
    static void normalize(std::array<std::int64_t, kLimbs>& limbs) noexcept {
        for (int i = 0; i + 1 < kLimbs; ++i) {
            const std::int64_t carry = limbs[i] >> 32;
            limbs[i] -= carry * (std::int64_t{1} << 32);
            limbs[i + 1] += carry;
        }
    }

    std::array<std::int64_t, kLimbs> limbs_{};
};

double exact_dot_split(const SplitFloat* a, const SplitFloat* b, std::size_t n) noexcept {
    ExactAccumulator acc;
    for (std::size_t i = 0; i < n; ++i) acc.add(a[i], b[i]);
    return acc.value();
}

}  // namespace

double exact_dot(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::DimMismatch, "exact_dot operands differ in length");
    ExactAccumulator acc;
    for (std::size_t i = 0; i < a.size(); ++i) acc.add(split(a[i]), split(b[i]));
    return acc.value();
}

Eigen::MatrixXd pixel_features(const FeatureMap& f) {
    validate(f);
    const auto n = static_cast<Eigen::Index>(f.pixel_count());
    Eigen::MatrixXd out(n, f.channels);
    for (std::uint32_t ch = 0; ch < f.channels; ++ch) {
        const float* plane = f.data.data() + std::size_t{ch} * f.pixel_count();
        for (Eigen::Index i = 0; i < n; ++i) out(i, ch) = plane[i];
    }
    return out;
}

AffinityMap compute_affinity(const FeatureMap& f, int workers) {
    validate(f);
    const std::size_t n = f.pixel_count();
    const std::size_t c = f.channels;

    std::vector<SplitFloat> split_features(n * c);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const float* plane = f.data.data() + ch * n;
        for (std::size_t i = 0; i < n; ++i) split_features[i * c + ch] = split(plane[i]);
    }

    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        const SplitFloat* fi = &split_features[i * c];
        norms[i] = std::sqrt(exact_dot_split(fi, fi, c));
        if (!(norms[i] > 1e-12)) throw Error(ErrorCode::ZeroNormPixel, "pixel " + std::to_string(i));
    }

    AffinityMap a;
    a.grid_h = f.height;
    a.grid_w = f.width;
    a.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const SplitFloat* fi = &split_features[i * c];
            for (std::size_t j = i; j < n; ++j) {
                const double dot = exact_dot_split(fi, &split_features[j * c], c);
                a.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dot / (norms[i] * norms[j]);
            }
        }
    });
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < i; ++j) a.values(i, j) = a.values(j, i);
    return a;
}

}  // namespace ipe
