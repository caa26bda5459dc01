#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "ipe/egm.hpp"
#include "ipe/pgm.hpp"

namespace ipe::cli {

struct RunConfig {
    std::filesystem::path image_dir;
    std::filesystem::path feature_dir;
    std::filesystem::path output_dir;
    PgmConfig pgm;
    EpisodeConfig episodes;
    int k_shot = 1;
    int episodes_per_label = 1;
    std::uint64_t global_seed = 0;
    int workers = 1;
    std::size_t limit = 0;  // 0 = every image

    bool operator==(const RunConfig&) const = default;
};

/// `key = value` lines, one per field, in a fixed order. Doubles use the
/// shortest representation that reads back to the same value.
std::string serialize(const RunConfig& cfg);

/// Reads `key = value` lines; blank lines and `#` comments are ignored.
/// Keys not present keep their defaults. Unknown keys and malformed values
/// raise ConfigError.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Applies a single `key=value` override.
void set_option(RunConfig& cfg, std::string_view key, std::string_view value);

/// Value ranges only; directory checks are per command.
void validate(const RunConfig& cfg);

}  // namespace ipe::cli
