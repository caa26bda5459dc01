#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "ipe/error.hpp"

namespace ipe::cli {

namespace {

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
    throw Error(ErrorCode::ConfigError,
                std::string(key) + " = '" + std::string(value) + "': " + std::string(why));
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) bad(key, value, "not a valid number");
    return out;
}

template <class T>
std::string format_number(T v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string_view filter_name(CrfFilter f) {
    switch (f) {
        case CrfFilter::Auto: return "auto";
        case CrfFilter::Exact: return "exact";
        case CrfFilter::Approximate: return "approximate";
    }
    return "auto";
}

struct Field {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, std::string_view)> set;
};

template <class T>
Field number(std::string key, T RunConfig::*outer) {
    return {key, [outer](const RunConfig& c) { return format_number(c.*outer); },
            [outer, key](RunConfig& c, std::string_view v) { c.*outer = parse_number<T>(key, v); }};
}

// Member reached through an accessor, for the nested structs.
template <class T, class Access>
Field nested(std::string key, Access access) {
    return {key, [access](const RunConfig& c) { return format_number<T>(access(c)); },
            [access, key](RunConfig& c, std::string_view v) { access(c) = parse_number<T>(key, v); }};
}

Field path(std::string key, std::filesystem::path RunConfig::*member) {
    return {key, [member](const RunConfig& c) { return (c.*member).string(); },
            [member](RunConfig& c, std::string_view v) { c.*member = std::filesystem::path(std::string(v)); }};
}

#define IPE_FIELD(T, key, expr) nested<T>(key, [](auto& c) -> auto& { return c.expr; })

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(path("paths.image_dir", &RunConfig::image_dir));
        f.push_back(path("paths.feature_dir", &RunConfig::feature_dir));
        f.push_back(path("paths.output_dir", &RunConfig::output_dir));
        f.push_back(number("run.seed", &RunConfig::global_seed));
        f.push_back(number("run.workers", &RunConfig::workers));
        f.push_back(number("run.limit", &RunConfig::limit));

        f.push_back(IPE_FIELD(std::uint32_t, "pgm.input_size", pgm.input_size));
        f.push_back(IPE_FIELD(int, "pgm.m", pgm.m));
        f.push_back(IPE_FIELD(int, "pgm.n", pgm.n));
        f.push_back(IPE_FIELD(int, "pgm.t", pgm.t));
        f.push_back(IPE_FIELD(double, "pgm.min_frac", pgm.min_frac));
        f.push_back(IPE_FIELD(double, "pgm.max_frac", pgm.max_frac));

        f.push_back(IPE_FIELD(double, "spectral.eig_tol", pgm.spectral.eig_tol));
        f.push_back(IPE_FIELD(int, "spectral.kmeans_restarts", pgm.spectral.kmeans_restarts));
        f.push_back(IPE_FIELD(int, "spectral.kmeans_max_iter", pgm.spectral.kmeans_max_iter));
        f.push_back(IPE_FIELD(std::uint64_t, "spectral.seed", pgm.spectral.seed));

        f.push_back(IPE_FIELD(double, "crf.w_appearance", pgm.crf.w_appearance));
        f.push_back(IPE_FIELD(double, "crf.theta_alpha", pgm.crf.theta_alpha));
        f.push_back(IPE_FIELD(double, "crf.theta_beta", pgm.crf.theta_beta));
        f.push_back(IPE_FIELD(double, "crf.w_smoothness", pgm.crf.w_smoothness));
        f.push_back(IPE_FIELD(double, "crf.theta_gamma", pgm.crf.theta_gamma));
        f.push_back(IPE_FIELD(int, "crf.iterations", pgm.crf.iterations));
        f.push_back(IPE_FIELD(double, "crf.label_smooth_eps", pgm.crf.label_smooth_eps));
        f.push_back({"crf.filter", [](const RunConfig& c) { return std::string(filter_name(c.pgm.crf.filter)); },
                     [](RunConfig& c, std::string_view v) {
                         for (auto mode : {CrfFilter::Auto, CrfFilter::Exact, CrfFilter::Approximate}) {
                             if (v == filter_name(mode)) {
                                 c.pgm.crf.filter = mode;
                                 return;
                             }
                         }
                         bad("crf.filter", v, "expected auto, exact or approximate");
                     }});
        f.push_back(IPE_FIELD(int, "crf.workers", pgm.crf.workers));

        f.push_back(IPE_FIELD(int, "episodes.k_shot", k_shot));
        f.push_back(IPE_FIELD(int, "episodes.per_label", episodes_per_label));
        f.push_back(IPE_FIELD(std::size_t, "episodes.min_foreground", episodes.min_foreground));
        f.push_back(IPE_FIELD(int, "episodes.max_resamples", episodes.max_resamples));

        f.push_back(IPE_FIELD(std::uint32_t, "egm.out_size", episodes.transforms.out_size));
        f.push_back(IPE_FIELD(double, "egm.crop.p", episodes.transforms.crop.p));
        f.push_back(IPE_FIELD(double, "egm.crop.scale_min", episodes.transforms.crop.scale_min));
        f.push_back(IPE_FIELD(double, "egm.crop.scale_max", episodes.transforms.crop.scale_max));
        f.push_back(IPE_FIELD(double, "egm.crop.ratio_min", episodes.transforms.crop.ratio_min));
        f.push_back(IPE_FIELD(double, "egm.crop.ratio_max", episodes.transforms.crop.ratio_max));
        f.push_back(IPE_FIELD(double, "egm.rotation.p", episodes.transforms.rotation.p));
        f.push_back(IPE_FIELD(double, "egm.rotation.degrees", episodes.transforms.rotation.degrees));
        f.push_back(IPE_FIELD(double, "egm.jitter.p", episodes.transforms.jitter.p));
        f.push_back(IPE_FIELD(double, "egm.jitter.brightness", episodes.transforms.jitter.brightness));
        f.push_back(IPE_FIELD(double, "egm.jitter.contrast", episodes.transforms.jitter.contrast));
        f.push_back(IPE_FIELD(double, "egm.jitter.saturation", episodes.transforms.jitter.saturation));
        f.push_back(IPE_FIELD(double, "egm.jitter.hue", episodes.transforms.jitter.hue));
        f.push_back(IPE_FIELD(double, "egm.grayscale.p", episodes.transforms.grayscale.p));
        f.push_back(IPE_FIELD(double, "egm.blur.p", episodes.transforms.blur.p));
        f.push_back(IPE_FIELD(double, "egm.blur.sigma_min", episodes.transforms.blur.sigma_min));
        f.push_back(IPE_FIELD(double, "egm.blur.sigma_max", episodes.transforms.blur.sigma_max));
        f.push_back(IPE_FIELD(double, "egm.flip.p", episodes.transforms.flip.p));
        return f;
    }();
    return table;
}

#undef IPE_FIELD

}  // namespace

std::string serialize(const RunConfig& cfg) {
    std::string out;
    for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
    return out;
}

void set_option(RunConfig& cfg, std::string_view key, std::string_view value) {
    for (const auto& f : fields()) {
        if (f.key == key) {
            f.set(cfg, value);
            return;
        }
    }
    throw Error(ErrorCode::ConfigError, "unknown config key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": expected key = value");
        set_option(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void validate(const RunConfig& cfg) {
    try {
        validate(cfg.pgm);
        validate(cfg.episodes.transforms);
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
    if (cfg.k_shot < 1) throw Error(ErrorCode::ConfigError, "episodes.k_shot must be >= 1");
    if (cfg.episodes_per_label < 1) throw Error(ErrorCode::ConfigError, "episodes.per_label must be >= 1");
    if (cfg.episodes.max_resamples < 0) throw Error(ErrorCode::ConfigError, "episodes.max_resamples must be >= 0");
    if (cfg.workers < 1) throw Error(ErrorCode::ConfigError, "run.workers must be >= 1");
}

}  // namespace ipe::cli
