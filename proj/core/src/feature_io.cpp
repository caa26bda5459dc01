#include "ipe/feature_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "ipe/error.hpp"

namespace ipe {

namespace {

constexpr std::uint8_t kMagic[4] = {'F', 'M', 'A', 'P'};
constexpr std::size_t kHeaderBytes = 20;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed: " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

bool has_png_signature(const std::vector<std::uint8_t>& bytes) {
    return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

// Decodes a PNG held in memory into the requested simplified-API format.
std::vector<std::uint8_t> decode_png(const std::vector<std::uint8_t>& bytes, png_uint_32 format,
                                     std::uint32_t& height, std::uint32_t& width, const std::string& name) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw Error(ErrorCode::IoFailure, name + ": " + image.message);
    image.format = format;
    std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
        png_image_free(&image);
        throw Error(ErrorCode::IoFailure, name + ": " + image.message);
    }
    height = image.height;
    width = image.width;
    return pixels;
}

void encode_png(const std::filesystem::path& path, const std::uint8_t* pixels, std::uint32_t height,
                std::uint32_t width, png_uint_32 format) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = width;
    image.height = height;
    image.format = format;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr))
        throw Error(ErrorCode::IoFailure, path.string() + ": " + image.message);
    std::vector<std::uint8_t> buffer(size);
    if (!png_image_write_to_memory(&image, buffer.data(), &size, 0, pixels, 0, nullptr))
        throw Error(ErrorCode::IoFailure, path.string() + ": " + image.message);
    buffer.resize(size);
    write_file(path, buffer);
}

// Binary PPM (P6, maxval 255).
ImageBuffer decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    std::size_t pos = 2;
    auto next_token = [&]() -> long {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        long value = 0;
        bool any = false;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + (bytes[pos++] - '0');
            any = true;
            if (value > (1L << 30)) break;
        }
        if (!any) throw Error(ErrorCode::IoFailure, name + ": malformed PPM header");
        return value;
    };
    const long w = next_token();
    const long h = next_token();
    const long maxval = next_token();
    if (w <= 0 || h <= 0 || maxval != 255) throw Error(ErrorCode::IoFailure, name + ": unsupported PPM");
    ++pos;  // single whitespace after maxval
    ImageBuffer img(static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(w));
    if (bytes.size() < pos + img.pixels.size()) throw Error(ErrorCode::IoFailure, name + ": truncated PPM");
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), img.pixels.size(), img.pixels.begin());
    return img;
}

}  // namespace

std::size_t MaskBuffer::foreground_count() const noexcept {
    return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{1}));
}

void validate(const FeatureMap& f) {
    if (f.channels == 0 || f.height == 0 || f.width == 0)
        throw Error(ErrorCode::DimMismatch, "feature map dims must be positive");
    const std::size_t expected = std::size_t{f.channels} * f.height * f.width;
    if (f.data.size() != expected)
        throw Error(ErrorCode::DimMismatch,
                    "payload has " + std::to_string(f.data.size()) + " values, expected " + std::to_string(expected));
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        if (!std::isfinite(f.data[i])) throw Error(ErrorCode::NonFiniteValue, "value at index " + std::to_string(i));
    }
}

std::vector<std::uint8_t> encode_feature_map(const FeatureMap& f) {
    validate(f);
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + f.data.size() * 4);
    for (std::uint8_t b : kMagic) out.push_back(b);
    put_u32(out, kFmapVersion);
    put_u32(out, f.channels);
    put_u32(out, f.height);
    put_u32(out, f.width);
    for (float v : f.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

FeatureMap decode_feature_map(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
        throw Error(ErrorCode::BadMagic, "missing FMAP magic");
    if (bytes.size() < kHeaderBytes) throw Error(ErrorCode::DimMismatch, "truncated FMAP header");
    const std::uint32_t version = get_u32(bytes.data() + 4);
    if (version != kFmapVersion)
        throw Error(ErrorCode::BadMagic, "unsupported FMAP version " + std::to_string(version));
    FeatureMap f;
    f.channels = get_u32(bytes.data() + 8);
    f.height = get_u32(bytes.data() + 12);
    f.width = get_u32(bytes.data() + 16);
    if (f.channels == 0 || f.height == 0 || f.width == 0)
        throw Error(ErrorCode::DimMismatch, "FMAP dims must be positive");
    const std::size_t payload = bytes.size() - kHeaderBytes;
    const std::size_t expected = std::size_t{f.channels} * f.height * f.width;
    if (payload % 4 != 0 || payload / 4 != expected)
        throw Error(ErrorCode::DimMismatch, "payload holds " + std::to_string(payload / 4) + " values, header says " +
                                                std::to_string(expected));
    f.data.resize(expected);
    const std::uint8_t* p = bytes.data() + kHeaderBytes;
    for (std::size_t i = 0; i < expected; ++i, p += 4) f.data[i] = std::bit_cast<float>(get_u32(p));
    validate(f);
    return f;
}

FeatureMap load_feature_map(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return decode_feature_map(bytes);
}

void save_feature_map(const FeatureMap& f, const std::filesystem::path& path) {
    write_file(path, encode_feature_map(f));
}

void save_mask(const MaskBuffer& mask, const std::filesystem::path& path) {
    if (mask.height == 0 || mask.width == 0 || mask.pixels.size() != mask.pixel_count())
        throw Error(ErrorCode::DimMismatch, "mask buffer size does not match dims");
    std::vector<std::uint8_t> gray(mask.pixels.size());
    for (std::size_t i = 0; i < gray.size(); ++i) {
        if (mask.pixels[i] > 1) throw Error(ErrorCode::NonBinaryPixel, "mask value " + std::to_string(mask.pixels[i]));
        gray[i] = mask.pixels[i] ? 255 : 0;
    }
    encode_png(path, gray.data(), mask.height, mask.width, PNG_FORMAT_GRAY);
}

MaskBuffer load_mask(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    if (!has_png_signature(bytes)) throw Error(ErrorCode::IoFailure, path.string() + ": not a PNG file");
    MaskBuffer mask;
    mask.pixels = decode_png(bytes, PNG_FORMAT_GRAY, mask.height, mask.width, path.string());
    for (auto& v : mask.pixels) {
        if (v == 255) {
            v = 1;
        } else if (v != 0) {
            throw Error(ErrorCode::NonBinaryPixel, path.string() + ": pixel value " + std::to_string(v));
        }
    }
    return mask;
}

ImageBuffer load_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    if (has_png_signature(bytes)) {
        ImageBuffer img;
        img.pixels = decode_png(bytes, PNG_FORMAT_RGB, img.height, img.width, path.string());
        return img;
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, path.string());
    throw Error(ErrorCode::IoFailure, path.string() + ": unsupported image format");
}

void save_image(const ImageBuffer& image, const std::filesystem::path& path) {
    if (image.height == 0 || image.width == 0 || image.pixels.size() != image.pixel_count() * 3)
        throw Error(ErrorCode::DimMismatch, "image buffer size does not match dims");
    encode_png(path, image.pixels.data(), image.height, image.width, PNG_FORMAT_RGB);
}

}  // namespace ipe
