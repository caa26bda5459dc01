#include "ipe/egm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ipe/error.hpp"
#include "sampling.hpp"

namespace ipe {

namespace {

constexpr std::uint64_t kQueryStream = 0x8000000000000000ull;

double lerp_uniform(UniformSource& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

void check_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " probability outside [0, 1]");
}

double luminance(const double* rgb) { return 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]; }

void clamp_unit(std::vector<double>& px) {
    for (auto& v : px) v = std::clamp(v, 0.0, 1.0);
}

void rgb_to_hsv(const double* rgb, double& h, double& s, double& v) {
    const double r = rgb[0], g = rgb[1], b = rgb[2];
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    v = mx;
    s = mx > 0.0 ? delta / mx : 0.0;
    if (delta <= 0.0) {
        h = 0.0;
        return;
    }
    if (mx == r) h = (g - b) / delta;
    else if (mx == g) h = 2.0 + (b - r) / delta;
    else h = 4.0 + (r - g) / delta;
    h /= 6.0;
    h -= std::floor(h);
}

void hsv_to_rgb(double h, double s, double v, double* rgb) {
    const double h6 = (h - std::floor(h)) * 6.0;
    const int sector = static_cast<int>(h6) % 6;
    const double f = h6 - std::floor(h6);
    const double p = v * (1 - s);
    const double q = v * (1 - s * f);
    const double t = v * (1 - s * (1 - f));
    double r = v, g = t, b = p;
    switch (sector) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
    rgb[0] = r;
    rgb[1] = g;
    rgb[2] = b;
}

void apply_jitter(const JitterParams& j, std::vector<double>& px) {
    const std::size_t n = px.size() / 3;
    for (JitterOp op : j.order) {
        switch (op) {
            case JitterOp::Brightness:
                for (auto& v : px) v = v * j.brightness;
                break;
            case JitterOp::Contrast: {
                double mean = 0.0;
                for (std::size_t i = 0; i < n; ++i) mean += luminance(&px[i * 3]);
                mean /= static_cast<double>(n);
                for (auto& v : px) v = j.contrast * v + (1.0 - j.contrast) * mean;
                break;
            }
            case JitterOp::Saturation:
                for (std::size_t i = 0; i < n; ++i) {
                    const double gray = luminance(&px[i * 3]);
                    for (int c = 0; c < 3; ++c)
                        px[i * 3 + c] = j.saturation * px[i * 3 + c] + (1.0 - j.saturation) * gray;
                }
                break;
            case JitterOp::Hue:
                for (std::size_t i = 0; i < n; ++i) {
                    double h, s, v;
                    rgb_to_hsv(&px[i * 3], h, s, v);
                    hsv_to_rgb(h + j.hue, s, v, &px[i * 3]);
                }
                break;
        }
        clamp_unit(px);
    }
}

void apply_grayscale(std::vector<double>& px) {
    for (std::size_t i = 0; i < px.size(); i += 3) {
        const double gray = luminance(&px[i]);
        px[i] = px[i + 1] = px[i + 2] = gray;
    }
}

// Separable, normalised Gaussian with reflect borders.
void apply_blur(double sigma, std::uint32_t h, std::uint32_t w, std::vector<double>& px) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int o = -radius; o <= radius; ++o) {
        const double t = std::exp(-(o * o) / (2.0 * sigma * sigma));
        taps[static_cast<std::size_t>(o + radius)] = t;
        sum += t;
    }
    for (auto& t : taps) t /= sum;
    auto reflect = [](int i, int size) {
        if (size == 1) return 0;
        while (i < 0 || i >= size) i = i < 0 ? -i : 2 * (size - 1) - i;
        return i;
    };
    const int hi = static_cast<int>(h);
    const int wi = static_cast<int>(w);
    std::vector<double> tmp(px.size());
    for (int y = 0; y < hi; ++y)
        for (int x = 0; x < wi; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int o = -radius; o <= radius; ++o)
                    acc += taps[static_cast<std::size_t>(o + radius)] *
                           px[(static_cast<std::size_t>(y) * w + static_cast<std::size_t>(reflect(x + o, wi))) * 3 + static_cast<std::size_t>(c)];
                tmp[(static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)) * 3 + static_cast<std::size_t>(c)] = acc;
            }
    for (int y = 0; y < hi; ++y)
        for (int x = 0; x < wi; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int o = -radius; o <= radius; ++o)
                    acc += taps[static_cast<std::size_t>(o + radius)] *
                           tmp[(static_cast<std::size_t>(reflect(y + o, hi)) * w + static_cast<std::size_t>(x)) * 3 + static_cast<std::size_t>(c)];
                px[(static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)) * 3 + static_cast<std::size_t>(c)] = acc;
            }
}

}  // namespace

void validate(const TransformConfig& cfg) {
    check_probability(cfg.crop.p, "crop");
    check_probability(cfg.rotation.p, "rotation");
    check_probability(cfg.jitter.p, "color jitter");
    check_probability(cfg.grayscale.p, "grayscale");
    check_probability(cfg.blur.p, "blur");
    check_probability(cfg.flip.p, "flip");
    if (cfg.out_size == 0) throw Error(ErrorCode::InvalidArgument, "out_size must be positive");
    if (!(cfg.crop.scale_min > 0.0) || !(cfg.crop.scale_min <= cfg.crop.scale_max) || !(cfg.crop.scale_max <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "crop scale range must satisfy 0 < min <= max <= 1");
    if (!(cfg.crop.ratio_min > 0.0) || !(cfg.crop.ratio_min <= cfg.crop.ratio_max))
        throw Error(ErrorCode::InvalidArgument, "crop ratio range must satisfy 0 < min <= max");
    if (!(cfg.rotation.degrees >= 0.0)) throw Error(ErrorCode::InvalidArgument, "rotation degrees must be >= 0");
    if (!(cfg.jitter.brightness >= 0.0) || !(cfg.jitter.contrast >= 0.0) || !(cfg.jitter.saturation >= 0.0) ||
        !(cfg.jitter.hue >= 0.0 && cfg.jitter.hue <= 0.5))
        throw Error(ErrorCode::InvalidArgument, "color jitter magnitudes out of range");
    if (!(cfg.blur.sigma_min > 0.0) || !(cfg.blur.sigma_min <= cfg.blur.sigma_max))
        throw Error(ErrorCode::InvalidArgument, "blur sigma range must satisfy 0 < min <= max");
}

ConcreteTransform sample_transform(const TransformConfig& cfg, UniformSource& rng) {
    ConcreteTransform t;
    t.out_size = cfg.out_size;
    if (rng.uniform() < cfg.crop.p) {
        CropParams c;
        c.scale = lerp_uniform(rng, cfg.crop.scale_min, cfg.crop.scale_max);
        c.log_ratio = lerp_uniform(rng, std::log(cfg.crop.ratio_min), std::log(cfg.crop.ratio_max));
        c.u_top = rng.uniform();
        c.u_left = rng.uniform();
        t.crop = c;
    }
    if (rng.uniform() < cfg.rotation.p) t.rotation_degrees = lerp_uniform(rng, -cfg.rotation.degrees, cfg.rotation.degrees);
    if (rng.uniform() < cfg.jitter.p) {
        JitterParams j;
        j.brightness = lerp_uniform(rng, std::max(0.0, 1.0 - cfg.jitter.brightness), 1.0 + cfg.jitter.brightness);
        j.contrast = lerp_uniform(rng, std::max(0.0, 1.0 - cfg.jitter.contrast), 1.0 + cfg.jitter.contrast);
        j.saturation = lerp_uniform(rng, std::max(0.0, 1.0 - cfg.jitter.saturation), 1.0 + cfg.jitter.saturation);
        j.hue = lerp_uniform(rng, -cfg.jitter.hue, cfg.jitter.hue);
        for (std::size_t i = j.order.size() - 1; i > 0; --i) {
            const auto k = std::min(i, static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1)));
            std::swap(j.order[i], j.order[k]);
        }
        t.jitter = j;
    }
    if (rng.uniform() < cfg.grayscale.p) t.grayscale = true;
    if (rng.uniform() < cfg.blur.p) t.blur_sigma = lerp_uniform(rng, cfg.blur.sigma_min, cfg.blur.sigma_max);
    if (rng.uniform() < cfg.flip.p) t.hflip = true;
    return t;
}

CropBox resolve_crop(const ConcreteTransform& t, std::uint32_t height, std::uint32_t width) {
    const double H = height;
    const double W = width;
    if (!t.crop) return {0.0, 0.0, H, W};
    const double area = t.crop->scale * H * W;
    const double ratio = std::exp(t.crop->log_ratio);
    const double cw = std::min(W, std::sqrt(area * ratio));
    const double ch = std::min(H, std::sqrt(area / ratio));
    return {t.crop->u_top * (H - ch), t.crop->u_left * (W - cw), ch, cw};
}

View apply_transform(const ConcreteTransform& t, const ImageBuffer& img, const MaskBuffer& mask) {
    if (img.height != mask.height || img.width != mask.width)
        throw Error(ErrorCode::DimMismatch, "image and mask dims differ");
    if (img.height == 0 || img.width == 0 || t.out_size == 0) throw Error(ErrorCode::InvalidArgument, "empty input");
    const std::uint32_t out = t.out_size;
    const double size = out;
    const CropBox box = resolve_crop(t, img.height, img.width);
    const double centre = size / 2.0;
    double cos_a = 1.0;
    double sin_a = 0.0;
    if (t.rotation_degrees) {
        const double rad = *t.rotation_degrees * std::numbers::pi / 180.0;
        cos_a = std::cos(rad);
        sin_a = std::sin(rad);
    }

    std::vector<double> px(std::size_t{out} * out * 3, 0.0);
    View v{ImageBuffer(out, out), MaskBuffer(out, out)};
    for (std::uint32_t row = 0; row < out; ++row) {
        for (std::uint32_t col = 0; col < out; ++col) {
            double x = col + 0.5;
            double y = row + 0.5;
            if (t.hflip) x = size - x;
            if (t.rotation_degrees) {
                // Inverse of a counter-clockwise rotation about the frame centre (y axis down).
                const double dx = x - centre;
                const double dy = y - centre;
                x = centre + dx * cos_a - dy * sin_a;
                y = centre + dx * sin_a + dy * cos_a;
                if (x < 0.0 || x >= size || y < 0.0 || y >= size) continue;
            }
            const double sx = box.left + x * box.width / size;
            const double sy = box.top + y * box.height / size;
            double rgb[3];
            detail::sample_bilinear(img, sx, sy, rgb);
            double* dst = &px[(std::size_t{row} * out + col) * 3];
            for (int c = 0; c < 3; ++c) dst[c] = rgb[c];
            v.mask.at(row, col) = mask.at(detail::nearest_index(sy, img.height), detail::nearest_index(sx, img.width));
        }
    }

    // Photometric stages work on [0, 1] intensities.
    const bool photometric = t.jitter || t.grayscale || t.blur_sigma;
    if (photometric) {
        for (auto& c : px) c /= 255.0;
        if (t.jitter) apply_jitter(*t.jitter, px);
        if (t.grayscale) apply_grayscale(px);
        if (t.blur_sigma) apply_blur(*t.blur_sigma, out, out, px);
        for (auto& c : px) c *= 255.0;
    }
    for (std::size_t i = 0; i < px.size(); ++i) v.image.pixels[i] = detail::quantize(px[i]);
    return v;
}

Episode generate_episode(const ImageBuffer& img, const PseudoLabel& label, int k_shot, const EpisodeConfig& cfg,
                         std::uint64_t seed) {
    validate(cfg.transforms);
    if (k_shot < 1) throw Error(ErrorCode::InvalidArgument, "K must be >= 1");
    if (cfg.max_resamples < 0) throw Error(ErrorCode::InvalidArgument, "max_resamples must be >= 0");
    if (label.mask.height != img.height || label.mask.width != img.width)
        throw Error(ErrorCode::DimMismatch, "pseudo-label does not match image dims");
    if (label.mask.foreground_count() == 0) throw Error(ErrorCode::InvalidArgument, "pseudo-label mask is empty");

    const auto views_needed = static_cast<std::size_t>(k_shot) + 1;
    std::vector<View> views;
    views.reserve(views_needed);
    for (std::size_t i = 0; i < views_needed; ++i) {
        const std::uint64_t view_seed = derive_seed(seed, i);
        bool accepted = false;
        for (int attempt = 0; attempt <= cfg.max_resamples && !accepted; ++attempt) {
            Rng rng(derive_seed(view_seed, static_cast<std::uint64_t>(attempt)));
            const auto t = sample_transform(cfg.transforms, rng);
            View v = apply_transform(t, img, label.mask);
            if (v.mask.foreground_count() >= cfg.min_foreground) {
                views.push_back(std::move(v));
                accepted = true;
            }
        }
        if (!accepted)
            throw Error(ErrorCode::EpisodeDegenerate, "view " + std::to_string(i) + " kept fewer than " +
                                                          std::to_string(cfg.min_foreground) + " foreground pixels after " +
                                                          std::to_string(cfg.max_resamples) + " resamples");
    }

    Rng query_rng(derive_seed(seed, kQueryStream));
    const auto query = static_cast<std::size_t>(query_rng.below(views_needed));
    Episode ep;
    ep.k_shot = k_shot;
    ep.source_image_id = label.source_image_id;
    ep.pseudo_label_cluster_id = label.cluster_id;
    ep.seed = seed;
    ep.query_view = static_cast<int>(query);
    ep.query = std::move(views[query]);
    for (std::size_t i = 0; i < views_needed; ++i)
        if (i != query) ep.supports.push_back(std::move(views[i]));
    return ep;
}

void write_episode(const std::filesystem::path& dir, const Episode& episode) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    save_image(episode.query.image, dir / "query.png");
    save_mask(episode.query.mask, dir / "query_mask.png");
    for (std::size_t i = 0; i < episode.supports.size(); ++i) {
        const std::string stem = "support_" + std::to_string(i + 1);
        save_image(episode.supports[i].image, dir / (stem + ".png"));
        save_mask(episode.supports[i].mask, dir / (stem + "_mask.png"));
    }
}

std::string manifest_line(const std::string& episode_id, const Episode& episode) {
    return episode_id + '\t' + episode.source_image_id + '\t' + std::to_string(episode.pseudo_label_cluster_id) + '\t' +
           std::to_string(episode.k_shot) + '\t' + std::to_string(episode.seed) + '\n';
}

}  // namespace ipe
