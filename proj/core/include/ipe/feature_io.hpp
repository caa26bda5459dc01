#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ipe {

/// Dense c x h x w tensor produced by the backbone for one image.
/// Layout is channel-major, then row-major: data[(ch * height + y) * width + x].
struct FeatureMap {
    std::uint32_t channels = 0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<float> data;

    std::size_t pixel_count() const noexcept { return std::size_t{height} * width; }
    float at(std::uint32_t ch, std::uint32_t y, std::uint32_t x) const {
        return data[(std::size_t{ch} * height + y) * width + x];
    }

    bool operator==(const FeatureMap&) const = default;
};

/// 8-bit RGB, row-major, interleaved.
struct ImageBuffer {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<std::uint8_t> pixels;

    ImageBuffer() = default;
    ImageBuffer(std::uint32_t h, std::uint32_t w) : height(h), width(w), pixels(std::size_t{h} * w * 3, 0) {}

    std::size_t pixel_count() const noexcept { return std::size_t{height} * width; }
    std::uint8_t* px(std::uint32_t y, std::uint32_t x) { return &pixels[(std::size_t{y} * width + x) * 3]; }
    const std::uint8_t* px(std::uint32_t y, std::uint32_t x) const { return &pixels[(std::size_t{y} * width + x) * 3]; }

    bool operator==(const ImageBuffer&) const = default;
};

/// Binary mask, values in {0, 1}, row-major.
struct MaskBuffer {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<std::uint8_t> pixels;

    MaskBuffer() = default;
    MaskBuffer(std::uint32_t h, std::uint32_t w) : height(h), width(w), pixels(std::size_t{h} * w, 0) {}

    std::size_t pixel_count() const noexcept { return std::size_t{height} * width; }
    std::uint8_t& at(std::uint32_t y, std::uint32_t x) { return pixels[std::size_t{y} * width + x]; }
    std::uint8_t at(std::uint32_t y, std::uint32_t x) const { return pixels[std::size_t{y} * width + x]; }
    std::size_t foreground_count() const noexcept;

    bool operator==(const MaskBuffer&) const = default;
};

inline constexpr std::uint32_t kFmapVersion = 1;

/// Checks the FeatureMap invariants (dims positive, length, finiteness).
void validate(const FeatureMap& f);

// FMAP: "FMAP" | version u32 | c u32 | h u32 | w u32 | c*h*w f32, little-endian.
std::vector<std::uint8_t> encode_feature_map(const FeatureMap& f);
FeatureMap decode_feature_map(std::span<const std::uint8_t> bytes);
FeatureMap load_feature_map(const std::filesystem::path& path);
void save_feature_map(const FeatureMap& f, const std::filesystem::path& path);

// Masks are 8-bit grayscale PNG with {0, 255} on disk and {0, 1} in memory.
void save_mask(const MaskBuffer& mask, const std::filesystem::path& path);
MaskBuffer load_mask(const std::filesystem::path& path);

/// Reads PNG (gray, gray+alpha, RGB, RGBA; 8 or 16 bit) or binary PPM (P6),
/// always returning 8-bit RGB.
ImageBuffer load_image(const std::filesystem::path& path);
void save_image(const ImageBuffer& image, const std::filesystem::path& path);

}  // namespace ipe
