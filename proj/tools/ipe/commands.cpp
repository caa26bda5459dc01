#include "commands.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "ipe/egm.hpp"
#include "ipe/error.hpp"
#include "ipe/feature_io.hpp"
#include "ipe/image_ops.hpp"
#include "ipe/pgm.hpp"
#include "ipe/random.hpp"
#include "ipe/synthetic.hpp"

namespace fs = std::filesystem;

namespace ipe::cli {

namespace {

constexpr std::string_view kLabelManifestHeader =
    "# ipe label manifest v1\n"
    "# columns: image_id\timage_file\tcluster_id\tmask_file\tk_best\td_q\tch_best\n";

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require_dir(const fs::path& dir, std::string_view what) {
    if (dir.empty()) throw Error(ErrorCode::ConfigError, std::string(what) + " is not set");
    if (!fs::is_directory(dir))
        throw Error(ErrorCode::ConfigError, std::string(what) + " '" + dir.string() + "' is not a directory");
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<fs::path> list_images(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = lower(entry.path().extension().string());
        if (ext == ".png" || ext == ".ppm") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
        return a.filename().string() < b.filename().string();
    });
    return out;
}

// Each index runs exactly once; tasks are pulled one at a time so slow
// images do not stall a whole chunk. Tasks must not throw.
template <class Fn>
void run_queue(std::size_t count, int workers, Fn&& fn) {
    const auto threads = static_cast<std::size_t>(std::max(1, std::min<int>(workers, static_cast<int>(count))));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    }
}

struct ImageOutcome {
    std::string image_id;
    std::string image_file;
    std::optional<std::string> skip_reason;
    std::vector<PseudoLabel> labels;
};

ImageOutcome label_one(const RunConfig& cfg, const fs::path& image_path, const fs::path& label_dir) {
    ImageOutcome out;
    out.image_id = image_path.stem().string();
    out.image_file = image_path.filename().string();
    PgmReport report;
    report.image_id = out.image_id;
    try {
        const fs::path fmap = cfg.feature_dir / (out.image_id + ".fmap");
        if (!fs::exists(fmap)) throw Error(ErrorCode::IoFailure, "missing feature map " + fmap.string());
        const FeatureMap features = load_feature_map(fmap);
        const ImageBuffer image = resize_bilinear(load_image(image_path), cfg.pgm.input_size, cfg.pgm.input_size);
        report = run_pgm(image, features, cfg.pgm, out.image_id);
    } catch (const Error& e) {
        report.skip_reason = e.code();
        report.skip_detail = e.what();
    } catch (const std::exception& e) {
        report.skip_reason = ErrorCode::IoFailure;
        report.skip_detail = e.what();
    }

    try {
        for (const auto& label : report.labels)
            save_mask(label.mask, label_dir / (out.image_id + "_c" + std::to_string(label.cluster_id) + ".png"));
        write_text(label_dir / (out.image_id + ".meta"), format_sidecar(report));
    } catch (const std::exception& e) {
        report.skip_reason = ErrorCode::IoFailure;
        report.skip_detail = e.what();
        report.labels.clear();
    }

    if (report.skipped()) {
        out.skip_reason = std::string(to_string(*report.skip_reason));
        spdlog::warn("{}: skipped ({}): {}", out.image_id, *out.skip_reason, report.skip_detail);
    } else {
        spdlog::info("{}: k={} labels={}", out.image_id, report.k_best, report.labels.size());
    }
    out.labels = std::move(report.labels);
    return out;
}

struct LabelRecord {
    std::string image_id;
    std::string image_file;
    int cluster_id = 0;
    std::string mask_file;
};

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) return out;
        start = tab + 1;
    }
}

std::vector<LabelRecord> read_label_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read label manifest " + path.string());
    std::vector<LabelRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        const auto cols = split_tabs(line);
        if (cols.size() < 4) throw Error(ErrorCode::ConfigError, "malformed manifest line: " + line);
        LabelRecord r;
        r.image_id = cols[0];
        r.image_file = cols[1];
        try {
            r.cluster_id = std::stoi(cols[2]);
        } catch (const std::exception&) {
            throw Error(ErrorCode::ConfigError, "malformed cluster id in manifest line: " + line);
        }
        r.mask_file = cols[3];
        out.push_back(std::move(r));
    }
    return out;
}

std::string class_of(const fs::path& relative) {
    const auto parent = relative.parent_path();
    return parent.empty() ? std::string("default") : parent.begin()->string();
}

nlohmann::json optional_number(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string format_optional(const std::optional<double>& v) {
    if (!v) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
}

}  // namespace

LabelSummary cmd_gen_labels(const RunConfig& cfg) {
    validate(cfg);
    require_dir(cfg.image_dir, "paths.image_dir");
    require_dir(cfg.feature_dir, "paths.feature_dir");
    if (cfg.output_dir.empty()) throw Error(ErrorCode::ConfigError, "paths.output_dir is not set");
    const fs::path label_dir = cfg.output_dir / "labels";
    make_dir(label_dir);

    auto images = list_images(cfg.image_dir);
    if (cfg.limit > 0 && images.size() > cfg.limit) images.resize(cfg.limit);

    std::vector<ImageOutcome> outcomes(images.size());
    run_queue(images.size(), cfg.workers, [&](std::size_t i) {
        try {
            outcomes[i] = label_one(cfg, images[i], label_dir);
        } catch (const std::exception& e) {
            outcomes[i].image_id = images[i].stem().string();
            outcomes[i].skip_reason = std::string(to_string(ErrorCode::IoFailure));
            spdlog::error("{}: {}", outcomes[i].image_id, e.what());
        }
    });

    LabelSummary summary;
    summary.images = outcomes.size();
    std::string manifest(kLabelManifestHeader);
    for (const auto& o : outcomes) {
        if (o.skip_reason) {
            ++summary.skipped;
            ++summary.skip_reasons[*o.skip_reason];
            continue;
        }
        ++summary.labeled_images;
        for (const auto& l : o.labels) {
            ++summary.labels;
            manifest += o.image_id + '\t' + o.image_file + '\t' + std::to_string(l.cluster_id) + '\t' + o.image_id +
                        "_c" + std::to_string(l.cluster_id) + ".png\t" + std::to_string(l.k_best) + '\t' +
                        format_double(l.d_q) + '\t' + format_double(l.ch_of_best) + '\n';
        }
    }
    write_text(label_dir / "labels.manifest", manifest);

    std::string text = "images=" + std::to_string(summary.images) + "\nlabeled_images=" +
                       std::to_string(summary.labeled_images) + "\nlabels=" + std::to_string(summary.labels) +
                       "\nskipped=" + std::to_string(summary.skipped) + "\n";
    for (const auto& [reason, count] : summary.skip_reasons) text += "skipped." + reason + "=" + std::to_string(count) + "\n";
    write_text(label_dir / "summary.txt", text);
    return summary;
}

std::uint64_t episode_seed(std::uint64_t global_seed, const std::string& image_id, int cluster_id, int index) {
    std::uint64_t s = derive_seed(global_seed, hash_string(image_id));
    s = derive_seed(s, static_cast<std::uint64_t>(static_cast<std::uint32_t>(cluster_id)));
    return derive_seed(s, static_cast<std::uint64_t>(index));
}

EpisodeSummary cmd_gen_episodes(const RunConfig& cfg) {
    validate(cfg);
    require_dir(cfg.image_dir, "paths.image_dir");
    if (cfg.output_dir.empty()) throw Error(ErrorCode::ConfigError, "paths.output_dir is not set");
    const fs::path label_dir = cfg.output_dir / "labels";
    const fs::path episode_dir = cfg.output_dir / "episodes";
    auto records = read_label_manifest(label_dir / "labels.manifest");
    if (cfg.limit > 0 && records.size() > cfg.limit) records.resize(cfg.limit);
    make_dir(episode_dir);

    const auto per_label = static_cast<std::size_t>(cfg.episodes_per_label);
    std::vector<std::optional<std::string>> lines(records.size() * per_label);
    run_queue(records.size(), cfg.workers, [&](std::size_t r) {
        const auto& rec = records[r];
        try {
            const ImageBuffer image =
                resize_bilinear(load_image(cfg.image_dir / rec.image_file), cfg.pgm.input_size, cfg.pgm.input_size);
            PseudoLabel label;
            label.mask = load_mask(label_dir / rec.mask_file);
            label.source_image_id = rec.image_id;
            label.cluster_id = rec.cluster_id;
            for (std::size_t e = 0; e < per_label; ++e) {
                const std::string id = rec.image_id + "_c" + std::to_string(rec.cluster_id) + "_e" + std::to_string(e);
                try {
                    const auto seed = episode_seed(cfg.global_seed, rec.image_id, rec.cluster_id, static_cast<int>(e));
                    const Episode ep = generate_episode(image, label, cfg.k_shot, cfg.episodes, seed);
                    write_episode(episode_dir / id, ep);
                    lines[r * per_label + e] = manifest_line(id, ep);
                } catch (const Error& err) {
                    spdlog::warn("{}: episode failed ({}): {}", id, to_string(err.code()), err.what());
                }
            }
        } catch (const std::exception& err) {
            spdlog::warn("{}_c{}: cannot load inputs: {}", rec.image_id, rec.cluster_id, err.what());
        }
    });

    EpisodeSummary summary;
    summary.labels = records.size();
    std::string manifest(kEpisodeManifestHeader);
    for (const auto& line : lines) {
        if (line) {
            ++summary.episodes;
            manifest += *line;
        } else {
            ++summary.failed;
        }
    }
    write_text(episode_dir / "episodes.manifest", manifest);
    return summary;
}

EvalReport cmd_eval(const fs::path& pred_dir, const fs::path& gt_dir) {
    require_dir(pred_dir, "prediction directory");
    require_dir(gt_dir, "ground-truth directory");
    std::vector<fs::path> gt_files;
    for (const auto& entry : fs::recursive_directory_iterator(gt_dir)) {
        if (entry.is_regular_file() && lower(entry.path().extension().string()) == ".png")
            gt_files.push_back(fs::relative(entry.path(), gt_dir));
    }
    std::sort(gt_files.begin(), gt_files.end());

    std::map<std::string, ClassEval> classes;
    EvalReport report;
    for (const auto& rel : gt_files) {
        const fs::path pred_path = pred_dir / rel;
        if (!fs::exists(pred_path)) {
            ++report.missing_predictions;
            spdlog::warn("no prediction for {}", rel.string());
            continue;
        }
        auto& cls = classes[class_of(rel)];
        cls.counts += confusion(load_mask(pred_path), load_mask(gt_dir / rel));
        ++cls.samples;
    }

    ConfusionCounts pooled;
    std::vector<std::optional<double>> per_class;
    for (auto& [name, cls] : classes) {
        cls.name = name;
        cls.iou = iou(cls.counts);
        pooled += cls.counts;
        per_class.push_back(cls.iou);
        report.classes.push_back(cls);
    }
    if (per_class.empty()) throw Error(ErrorCode::ConfigError, "no mask pairs found under " + gt_dir.string());
    report.miou = miou(per_class);
    report.fb_iou = fb_iou(pooled);
    return report;
}

std::string format_eval_table(const EvalReport& report) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-24s %8s %12s\n", "class", "samples", "IoU");
    out << line;
    for (const auto& c : report.classes) {
        std::snprintf(line, sizeof line, "%-24s %8zu %12s\n", c.name.c_str(), c.samples, format_optional(c.iou).c_str());
        out << line;
    }
    const auto miou = std::isnan(report.miou.value) ? std::optional<double>{} : report.miou.value;
    out << "mIoU    " << format_optional(miou) << "  (" << report.miou.included << " classes, " << report.miou.excluded
        << " undefined)\n";
    out << "FB-IoU  " << format_optional(report.fb_iou) << '\n';
    if (report.missing_predictions > 0) out << "missing predictions: " << report.missing_predictions << '\n';
    return out.str();
}

std::string format_eval_records(const EvalReport& report) {
    std::string out;
    for (const auto& c : report.classes) {
        nlohmann::json j{{"type", "class"},   {"class", c.name},     {"samples", c.samples},
                         {"tp", c.counts.tp}, {"fp", c.counts.fp},   {"fn", c.counts.fn},
                         {"tn", c.counts.tn}, {"iou", optional_number(c.iou)}};
        out += j.dump() + '\n';
    }
    const auto miou = std::isnan(report.miou.value) ? std::optional<double>{} : report.miou.value;
    nlohmann::json s{{"type", "summary"},
                     {"miou", optional_number(miou)},
                     {"classes_included", report.miou.included},
                     {"classes_undefined", report.miou.excluded},
                     {"fb_iou", optional_number(report.fb_iou)},
                     {"missing_predictions", report.missing_predictions}};
    out += s.dump() + '\n';
    return out;
}

SynthCheckResult cmd_synth_check(const RunConfig& cfg, std::uint64_t scene_seed) {
    validate(cfg);
    SyntheticSceneSpec spec;
    spec.image_size = cfg.pgm.input_size;
    const auto start = std::chrono::steady_clock::now();
    const SyntheticScene scene = make_disc_scene(scene_seed, spec);
    const PgmReport report = run_pgm(scene.image, scene.features, cfg.pgm, "synthetic");
    SynthCheckResult result;
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.k_best = report.k_best;
    result.skipped = report.skipped();
    if (!result.skipped) {
        result.iou = iou(confusion(report.labels.front().mask, scene.disc)).value_or(0.0);
        result.passed = result.iou >= 0.9;
    }
    return result;
}

void quiet_logging() { spdlog::set_level(spdlog::level::err); }

}  // namespace ipe::cli
