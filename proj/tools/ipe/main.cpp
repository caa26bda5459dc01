#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "commands.hpp"
#include "ipe/error.hpp"

namespace {

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("ipe");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* level = std::getenv("IPE_LOG")) spdlog::set_level(spdlog::level::from_str(level));
}

struct Overrides {
    std::string config_file;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::size_t> limit;
    std::optional<std::string> images, features, out;
    std::optional<int> k_shot, per_label;
};

ipe::cli::RunConfig resolve(const Overrides& o) {
    ipe::cli::RunConfig cfg = o.config_file.empty() ? ipe::cli::RunConfig{} : ipe::cli::load_config(o.config_file);
    for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ipe::Error(ipe::ErrorCode::ConfigError, "--set expects key=value: " + kv);
        ipe::cli::set_option(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.seed) cfg.global_seed = *o.seed;
    if (o.workers) cfg.workers = *o.workers;
    if (o.limit) cfg.limit = *o.limit;
    if (o.images) cfg.image_dir = *o.images;
    if (o.features) cfg.feature_dir = *o.features;
    if (o.out) cfg.output_dir = *o.out;
    if (o.k_shot) cfg.k_shot = *o.k_shot;
    if (o.per_label) cfg.episodes_per_label = *o.per_label;
    ipe::cli::validate(cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Unsupervised pseudo-label and few-shot episode generation"};
    app.require_subcommand(0, 1);
    Overrides o;
    bool print_config = false;
    app.add_option("--config", o.config_file, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("--set", o.sets, "override one config key (key=value), repeatable");
    app.add_option("--seed", o.seed, "global seed");
    app.add_option("--workers", o.workers, "parallel images");
    app.add_option("--limit", o.limit, "process at most this many inputs");
    app.add_flag("--print-config", print_config, "print the effective configuration and exit");

    auto* labels = app.add_subcommand("gen-labels", "pseudo-labels from images and feature maps");
    labels->add_option("--images", o.images, "image directory");
    labels->add_option("--features", o.features, "feature map directory (<stem>.fmap)");
    labels->add_option("--out", o.out, "output directory");

    auto* episodes = app.add_subcommand("gen-episodes", "few-shot episodes from generated labels");
    episodes->add_option("--images", o.images, "image directory");
    episodes->add_option("--out", o.out, "output directory holding labels/");
    episodes->add_option("--k", o.k_shot, "support views per episode");
    episodes->add_option("--per-label", o.per_label, "episodes drawn per label");

    auto* eval = app.add_subcommand("eval", "score predicted masks against ground truth");
    std::string pred_dir, gt_dir, format = "table", records_file;
    eval->add_option("--pred", pred_dir, "prediction directory")->required();
    eval->add_option("--gt", gt_dir, "ground-truth directory")->required();
    eval->add_option("--format", format, "table, jsonl or both")->check(CLI::IsMember({"table", "jsonl", "both"}));
    eval->add_option("--records", records_file, "also write JSON lines to this file");

    auto* synth = app.add_subcommand("synth-check", "run the label pipeline on a generated scene");
    std::uint64_t scene_seed = 0;
    synth->add_option("--scene-seed", scene_seed, "seed of the generated scene");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = resolve(o);
        if (print_config || app.get_subcommands().empty()) {
            std::cout << ipe::cli::serialize(cfg);
            return 0;
        }
        if (labels->parsed()) {
            const auto s = ipe::cli::cmd_gen_labels(cfg);
            std::cout << "images " << s.images << ", labeled " << s.labeled_images << ", labels " << s.labels
                      << ", skipped " << s.skipped << '\n';
            for (const auto& [reason, count] : s.skip_reasons) std::cout << "  skipped " << reason << ": " << count << '\n';
        } else if (episodes->parsed()) {
            const auto s = ipe::cli::cmd_gen_episodes(cfg);
            std::cout << "labels " << s.labels << ", episodes " << s.episodes << ", failed " << s.failed << '\n';
        } else if (eval->parsed()) {
            const auto report = ipe::cli::cmd_eval(pred_dir, gt_dir);
            if (format != "jsonl") std::cout << ipe::cli::format_eval_table(report);
            if (format != "table") std::cout << ipe::cli::format_eval_records(report);
            if (!records_file.empty()) {
                std::ofstream out(records_file, std::ios::binary | std::ios::trunc);
                out << ipe::cli::format_eval_records(report);
                if (!out) throw ipe::Error(ipe::ErrorCode::IoFailure, "cannot write " + records_file);
            }
        } else if (synth->parsed()) {
            const auto r = ipe::cli::cmd_synth_check(cfg, scene_seed);
            if (r.skipped) {
                std::cout << "synth-check: image skipped, FAIL\n";
                return 1;
            }
            std::printf("synth-check: iou=%.4f k_best=%d time=%.2fs %s\n", r.iou, r.k_best, r.seconds,
                        r.passed ? "PASS" : "FAIL");
            return r.passed ? 0 : 1;
        }
    } catch (const ipe::Error& e) {
        spdlog::error("{}: {}", ipe::to_string(e.code()), e.what());
        return e.code() == ipe::ErrorCode::ConfigError ? 2 : 3;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 3;
    }
    return 0;
}
