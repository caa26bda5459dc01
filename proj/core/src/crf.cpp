#include "ipe/crf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>
#include <utility>

#include "ipe/error.hpp"
#include "ipe/parallel.hpp"

namespace ipe {

namespace {

constexpr int kGridDims = 5;
constexpr int kGridCorners = 1 << kGridDims;
constexpr int kGridBlurRadius = 3;
// Blur variance in cell units; splatting and slicing each add 1/6 more.
constexpr double kGridBlurVariance = 2.0 / 3.0;

void check_field(const UnaryField& u) {
    if (u.labels_k < 1 || u.probs.size() != u.pixel_count() * static_cast<std::size_t>(u.labels_k))
        throw Error(ErrorCode::DimMismatch, "unary field size does not match dims");
}

// Sum over j != p of exp(-|pos_p - pos_j|^2 / 2 theta^2) v_j via two 1-D passes
// over a channels-interleaved field.
std::vector<double> spatial_gaussian(const std::vector<double>& values, std::size_t channels, int h, int w,
                                     double theta, int workers) {
    const std::size_t k = channels;
    const int radius = static_cast<int>(std::ceil(4.0 * theta));
    std::vector<double> taps(static_cast<std::size_t>(radius) + 1);
    for (int o = 0; o <= radius; ++o) taps[static_cast<std::size_t>(o)] = std::exp(-(o * o) / (2.0 * theta * theta));
    const auto width = static_cast<std::size_t>(w);

    std::vector<double> rows(values.size(), 0.0);
    parallel_for(static_cast<std::size_t>(h), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t y = begin; y < end; ++y) {
            for (int x = 0; x < w; ++x) {
                double* dst = &rows[(y * width + static_cast<std::size_t>(x)) * k];
                const int lo = std::max(0, x - radius);
                const int hi = std::min(w - 1, x + radius);
                for (int xx = lo; xx <= hi; ++xx) {
                    const double t = taps[static_cast<std::size_t>(std::abs(xx - x))];
                    const double* src = &values[(y * width + static_cast<std::size_t>(xx)) * k];
                    for (std::size_t l = 0; l < k; ++l) dst[l] += t * src[l];
                }
            }
        }
    });
    std::vector<double> out(values.size(), 0.0);
    parallel_for(static_cast<std::size_t>(h), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t y = begin; y < end; ++y) {
            const int yi = static_cast<int>(y);
            const int lo = std::max(0, yi - radius);
            const int hi = std::min(h - 1, yi + radius);
            for (int x = 0; x < w; ++x) {
                const std::size_t p = y * width + static_cast<std::size_t>(x);
                double* dst = &out[p * k];
                for (int yy = lo; yy <= hi; ++yy) {
                    const double t = taps[static_cast<std::size_t>(std::abs(yy - yi))];
                    const double* src = &rows[(static_cast<std::size_t>(yy) * width + static_cast<std::size_t>(x)) * k];
                    for (std::size_t l = 0; l < k; ++l) dst[l] += t * src[l];
                }
                for (std::size_t l = 0; l < k; ++l) dst[l] -= values[p * k + l];
            }
        }
    });
    return out;
}

// Dense 5-D grid over (x, y, r, g, b) scaled by the kernel bandwidths, with
// unit cell spacing. Splat and slice are multilinear; the blur is a sampled
// Gaussian per axis.
class BilateralGrid {
public:
    BilateralGrid(const ImageBuffer& img, double theta_pos, double theta_color) {
        const std::size_t n = img.pixel_count();
        std::vector<std::array<double, kGridDims>> coords(n);
        std::array<double, kGridDims> lo;
        std::array<double, kGridDims> hi;
        lo.fill(std::numeric_limits<double>::infinity());
        hi.fill(-std::numeric_limits<double>::infinity());
        for (std::uint32_t y = 0; y < img.height; ++y) {
            for (std::uint32_t x = 0; x < img.width; ++x) {
                const std::size_t p = std::size_t{y} * img.width + x;
                const std::uint8_t* rgb = img.px(y, x);
                auto& c = coords[p];
                c = {x / theta_pos, y / theta_pos, rgb[0] / theta_color, rgb[1] / theta_color, rgb[2] / theta_color};
                for (std::size_t d = 0; d < kGridDims; ++d) {
                    lo[d] = std::min(lo[d], c[d]);
                    hi[d] = std::max(hi[d], c[d]);
                }
            }
        }
        cells_ = 1;
        for (int d = kGridDims - 1; d >= 0; --d) {
            const auto du = static_cast<std::size_t>(d);
            dims_[du] = static_cast<std::size_t>(std::floor(hi[du] - lo[du])) + 2;
            strides_[du] = cells_;
            cells_ *= dims_[du];
        }
        for (int c = 0; c < kGridCorners; ++c) {
            std::size_t off = 0;
            for (int d = 0; d < kGridDims; ++d)
                if (c & (1 << d)) off += strides_[static_cast<std::size_t>(d)];
            corner_offsets_[static_cast<std::size_t>(c)] = off;
        }

        for (int o = -kGridBlurRadius; o <= kGridBlurRadius; ++o)
            taps_[static_cast<std::size_t>(o + kGridBlurRadius)] = std::exp(-(o * o) / (2.0 * kGridBlurVariance));
        double tap_sum = 0.0;
        for (double t : taps_) tap_sum += t;
        // Per axis the pipeline integrates to tap_sum * N(0, 1); rescale to a unit-peak Gaussian.
        scale_ = std::pow(std::sqrt(2.0 * M_PI) / tap_sum, kGridDims);

        base_.resize(n);
        weights_.resize(n);
        self_.resize(n);
        for (std::size_t p = 0; p < n; ++p) {
            std::size_t base = 0;
            std::array<double, kGridDims> frac;
            double self = scale_;
            for (std::size_t d = 0; d < kGridDims; ++d) {
                const double u = coords[p][d] - lo[d];
                const double cell = std::floor(u);
                const double f = u - cell;
                frac[d] = f;
                base += static_cast<std::size_t>(cell) * strides_[d];
                self *= ((1 - f) * (1 - f) + f * f) * taps_[kGridBlurRadius] + 2 * f * (1 - f) * taps_[kGridBlurRadius + 1];
            }
            base_[p] = base;
            self_[p] = self;
            for (int c = 0; c < kGridCorners; ++c) {
                double wgt = 1.0;
                for (int d = 0; d < kGridDims; ++d) {
                    const double f = frac[static_cast<std::size_t>(d)];
                    wgt *= (c & (1 << d)) ? f : 1.0 - f;
                }
                weights_[p][static_cast<std::size_t>(c)] = wgt;
            }
        }
    }

    // out[p * channels + channel] = sum_{j != p} k(p, j) v_j(channel), approximately.
    // The pixel's own splat is removed at slice time using its exact self response.
    void filter(const std::vector<double>& values, std::size_t channels, std::size_t channel,
                std::vector<double>& out) const {
        const std::size_t n = base_.size();
        std::vector<double> grid(cells_, 0.0);
        std::vector<double> scratch(cells_, 0.0);
        for (std::size_t p = 0; p < n; ++p) {
            const double v = values[p * channels + channel];
            if (v == 0.0) continue;
            for (std::size_t c = 0; c < kGridCorners; ++c) grid[base_[p] + corner_offsets_[c]] += weights_[p][c] * v;
        }
        for (std::size_t d = 0; d < kGridDims; ++d) {
            const std::size_t stride = strides_[d];
            const auto dim = static_cast<long>(dims_[d]);
            for (std::size_t idx = 0; idx < cells_; ++idx) {
                const long coord = static_cast<long>((idx / stride) % dims_[d]);
                double acc = 0.0;
                for (int o = -kGridBlurRadius; o <= kGridBlurRadius; ++o) {
                    const long cc = coord + o;
                    if (cc < 0 || cc >= dim) continue;
                    acc += taps_[static_cast<std::size_t>(o + kGridBlurRadius)] *
                           grid[static_cast<std::size_t>(static_cast<long>(idx) + o * static_cast<long>(stride))];
                }
                scratch[idx] = acc;
            }
            grid.swap(scratch);
        }
        for (std::size_t p = 0; p < n; ++p) {
            double acc = 0.0;
            for (std::size_t c = 0; c < kGridCorners; ++c) acc += weights_[p][c] * grid[base_[p] + corner_offsets_[c]];
            const double v = values[p * channels + channel];
            out[p * channels + channel] = scale_ * acc - self_[p] * v;
        }
    }

private:
    std::array<std::size_t, kGridDims> dims_{};
    std::array<std::size_t, kGridDims> strides_{};
    std::array<std::size_t, kGridCorners> corner_offsets_{};
    std::array<double, 2 * kGridBlurRadius + 1> taps_{};
    std::size_t cells_ = 0;
    double scale_ = 1.0;
    std::vector<std::size_t> base_;
    std::vector<std::array<double, kGridCorners>> weights_;
    std::vector<double> self_;
};

bool use_exact(const CrfParams& p, std::size_t pixels) {
    switch (p.filter) {
        case CrfFilter::Exact: return true;
        case CrfFilter::Approximate: return false;
        case CrfFilter::Auto: break;
    }
    return pixels <= kExactFilterMaxPixels;
}

// Both Gaussian kernels for one image. Each kernel's message is normalised by
// 1 + sum_{j != p} k(p, j), so it is a weighted average bounded by 1.
class PairwiseKernels {
public:
    PairwiseKernels(const ImageBuffer& img, const CrfParams& p) : img_(img), params_(p) {
        n_ = img.pixel_count();
        exact_ = use_exact(p, n_);
        if (!exact_ && p.w_appearance != 0.0) grid_.emplace(img, p.theta_alpha, p.theta_beta);
        const std::vector<double> ones(n_, 1.0);
        if (exact_) {
            auto [a, s] = exact_sums(ones, 1);
            norm_a_ = std::move(a);
            norm_s_ = std::move(s);
        } else {
            if (p.w_appearance != 0.0) {
                norm_a_.assign(n_, 0.0);
                grid_->filter(ones, 1, 0, norm_a_);
            }
            if (p.w_smoothness != 0.0)
                norm_s_ = spatial_gaussian(ones, 1, static_cast<int>(img.height), static_cast<int>(img.width),
                                           p.theta_gamma, p.workers);
        }
        for (auto& v : norm_a_) v = 1.0 / (1.0 + std::max(v, 0.0));
        for (auto& v : norm_s_) v = 1.0 / (1.0 + std::max(v, 0.0));
    }

    std::vector<double> messages(const UnaryField& q) const {
        const std::size_t k = static_cast<std::size_t>(q.labels_k);
        std::vector<double> sum_a;
        std::vector<double> sum_s;
        if (exact_) {
            std::tie(sum_a, sum_s) = exact_sums(q.probs, k);
        } else {
            if (params_.w_appearance != 0.0) {
                sum_a.assign(q.probs.size(), 0.0);
                // Labels write disjoint slots of sum_a.
                parallel_for(k, params_.workers, [&](std::size_t begin, std::size_t end) {
                    for (std::size_t l = begin; l < end; ++l) grid_->filter(q.probs, k, l, sum_a);
                });
            }
            if (params_.w_smoothness != 0.0)
                sum_s = spatial_gaussian(q.probs, k, static_cast<int>(q.height), static_cast<int>(q.width),
                                         params_.theta_gamma, params_.workers);
        }
        std::vector<double> out(q.probs.size(), 0.0);
        for (std::size_t px = 0; px < n_; ++px) {
            for (std::size_t l = 0; l < k; ++l) {
                double m = 0.0;
                if (params_.w_appearance != 0.0) m += params_.w_appearance * norm_a_[px] * sum_a[px * k + l];
                if (params_.w_smoothness != 0.0) m += params_.w_smoothness * norm_s_[px] * sum_s[px * k + l];
                out[px * k + l] = m;
            }
        }
        return out;
    }

private:
    // Unnormalised sums over j != p for both kernels.
    std::pair<std::vector<double>, std::vector<double>> exact_sums(const std::vector<double>& values,
                                                                   std::size_t k) const {
        const std::size_t w = img_.width;
        const double inv_a = 1.0 / (2.0 * params_.theta_alpha * params_.theta_alpha);
        const double inv_b = 1.0 / (2.0 * params_.theta_beta * params_.theta_beta);
        const double inv_g = 1.0 / (2.0 * params_.theta_gamma * params_.theta_gamma);
        std::vector<double> sa(n_ * k, 0.0);
        std::vector<double> ss(n_ * k, 0.0);
        parallel_for(n_, params_.workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const double yi = static_cast<double>(i / w);
                const double xi = static_cast<double>(i % w);
                const std::uint8_t* ci = &img_.pixels[i * 3];
                for (std::size_t j = 0; j < n_; ++j) {
                    if (j == i) continue;
                    const double dy = yi - static_cast<double>(j / w);
                    const double dx = xi - static_cast<double>(j % w);
                    const double pos2 = dx * dx + dy * dy;
                    const std::uint8_t* cj = &img_.pixels[j * 3];
                    double col2 = 0.0;
                    for (int c = 0; c < 3; ++c) {
                        const double dc = static_cast<double>(ci[c]) - static_cast<double>(cj[c]);
                        col2 += dc * dc;
                    }
                    const double ka = std::exp(-pos2 * inv_a - col2 * inv_b);
                    const double ks = std::exp(-pos2 * inv_g);
                    const double* src = &values[j * k];
                    for (std::size_t l = 0; l < k; ++l) {
                        sa[i * k + l] += ka * src[l];
                        ss[i * k + l] += ks * src[l];
                    }
                }
            }
        });
        return {std::move(sa), std::move(ss)};
    }

    const ImageBuffer& img_;
    CrfParams params_;
    std::size_t n_ = 0;
    bool exact_ = true;
    std::optional<BilateralGrid> grid_;
    std::vector<double> norm_a_;
    std::vector<double> norm_s_;
};

}  // namespace

void validate(const CrfParams& p) {
    if (!(p.w_appearance >= 0.0) || !(p.w_smoothness >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "CRF kernel weights must be nonnegative");
    if (!(p.theta_alpha > 0.0) || !(p.theta_beta > 0.0) || !(p.theta_gamma > 0.0))
        throw Error(ErrorCode::InvalidArgument, "CRF bandwidths must be positive");
    if (p.iterations < 1) throw Error(ErrorCode::InvalidArgument, "CRF iterations must be >= 1");
    if (!(p.label_smooth_eps >= 0.0) || !(p.label_smooth_eps < 1.0))
        throw Error(ErrorCode::InvalidArgument, "label_smooth_eps must lie in [0, 1)");
}

std::vector<int> upsample_labels(const ClusterResult& c, std::uint32_t image_h, std::uint32_t image_w) {
    if (c.labels.size() != std::size_t{c.grid_h} * c.grid_w || c.grid_h == 0 || c.grid_w == 0)
        throw Error(ErrorCode::DimMismatch, "cluster labels do not match grid dims");
    if (image_h < c.grid_h || image_w < c.grid_w)
        throw Error(ErrorCode::InvalidArgument, "image must be at least as large as the feature grid");
    std::vector<int> out(std::size_t{image_h} * image_w);
    for (std::uint32_t y = 0; y < image_h; ++y) {
        const std::size_t gy = std::size_t{y} * c.grid_h / image_h;
        for (std::uint32_t x = 0; x < image_w; ++x) {
            const std::size_t gx = std::size_t{x} * c.grid_w / image_w;
            out[std::size_t{y} * image_w + x] = c.labels[gy * c.grid_w + gx];
        }
    }
    return out;
}

UnaryField labels_to_unary(const std::vector<int>& labels, std::uint32_t height, std::uint32_t width, int k,
                           double eps) {
    if (k < 2) throw Error(ErrorCode::DegenerateK, "unary field needs k >= 2");
    if (!(eps >= 0.0) || !(eps < 1.0)) throw Error(ErrorCode::InvalidArgument, "eps must lie in [0, 1)");
    if (labels.size() != std::size_t{height} * width) throw Error(ErrorCode::DimMismatch, "labels do not match dims");
    UnaryField u{k, height, width, std::vector<double>(labels.size() * static_cast<std::size_t>(k))};
    const double off = eps / (k - 1);
    const double on = 1.0 - eps;
    for (std::size_t p = 0; p < labels.size(); ++p) {
        if (labels[p] < 0 || labels[p] >= k) throw Error(ErrorCode::InvalidArgument, "label out of range");
        for (int l = 0; l < k; ++l) u.probs[p * static_cast<std::size_t>(k) + static_cast<std::size_t>(l)] = l == labels[p] ? on : off;
    }
    return u;
}

std::vector<int> argmax_labels(const UnaryField& u) {
    check_field(u);
    const std::size_t k = static_cast<std::size_t>(u.labels_k);
    std::vector<int> out(u.pixel_count());
    for (std::size_t p = 0; p < out.size(); ++p) {
        const double* row = &u.probs[p * k];
        std::size_t best = 0;
        for (std::size_t l = 1; l < k; ++l)
            if (row[l] > row[best]) best = l;
        out[p] = static_cast<int>(best);
    }
    return out;
}

std::vector<double> pairwise_messages(const ImageBuffer& img, const UnaryField& q, const CrfParams& p) {
    check_field(q);
    if (img.height != q.height || img.width != q.width || img.pixels.size() != img.pixel_count() * 3)
        throw Error(ErrorCode::DimMismatch, "image and unary field dims differ");
    return PairwiseKernels(img, p).messages(q);
}

CrfResult mean_field_refine(const ImageBuffer& img, const UnaryField& u, const CrfParams& p,
                            const CrfObserver& observer) {
    validate(p);
    check_field(u);
    if (img.height != u.height || img.width != u.width) throw Error(ErrorCode::DimMismatch, "image and unary dims differ");
    const std::size_t k = static_cast<std::size_t>(u.labels_k);
    const std::size_t n = u.pixel_count();

    std::vector<double> log_unary(u.probs.size());
    for (std::size_t i = 0; i < u.probs.size(); ++i) {
        if (!(u.probs[i] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "unary probabilities must be nonnegative");
        log_unary[i] = std::log(u.probs[i]);
    }

    UnaryField q = u;
    UnaryField next = u;
    const bool pairwise = p.w_appearance != 0.0 || p.w_smoothness != 0.0;
    std::optional<PairwiseKernels> kernels;
    if (pairwise) kernels.emplace(img, p);
    for (int it = 1; it <= p.iterations; ++it) {
        const std::vector<double> messages = pairwise ? kernels->messages(q) : std::vector<double>(n * k, 0.0);
        parallel_for(n, p.workers, [&](std::size_t begin, std::size_t end) {
            std::vector<double> energy(k);
            for (std::size_t px = begin; px < end; ++px) {
                const double* m = &messages[px * k];
                double total = 0.0;
                for (std::size_t l = 0; l < k; ++l) total += m[l];
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t l = 0; l < k; ++l) {
                    // Potts: penalty is the message mass on every other label.
                    energy[l] = log_unary[px * k + l] - (total - m[l]);
                    best = std::max(best, energy[l]);
                }
                double z = 0.0;
                for (std::size_t l = 0; l < k; ++l) {
                    energy[l] = std::exp(energy[l] - best);
                    z += energy[l];
                }
                for (std::size_t l = 0; l < k; ++l) next.probs[px * k + l] = energy[l] / z;
            }
        });
        std::swap(q, next);
        if (observer) observer(it, q);
    }
    CrfResult result{q, argmax_labels(q)};
    return result;
}

}  // namespace ipe
