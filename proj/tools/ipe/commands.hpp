#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ipe/metrics.hpp"
#include "run_config.hpp"

namespace ipe::cli {

struct LabelSummary {
    std::size_t images = 0;
    std::size_t labeled_images = 0;
    std::size_t labels = 0;
    std::size_t skipped = 0;
    std::map<std::string, std::size_t> skip_reasons;
};

/// Pseudo-labels for every image in image_dir that has `<stem>.fmap` in
/// feature_dir. Writes into output_dir/labels: `<stem>_c<id>.png` masks,
/// `<stem>.meta` audit sidecars, `labels.manifest` and `summary.txt`.
/// A failing image is skipped and recorded; it never aborts the run.
LabelSummary cmd_gen_labels(const RunConfig& cfg);

struct EpisodeSummary {
    std::size_t labels = 0;
    std::size_t episodes = 0;
    std::size_t failed = 0;
};

/// Reads output_dir/labels/labels.manifest and writes
/// output_dir/episodes/<episode_id>/ plus episodes.manifest.
EpisodeSummary cmd_gen_episodes(const RunConfig& cfg);

/// Seed of one episode, a pure function of its identity.
std::uint64_t episode_seed(std::uint64_t global_seed, const std::string& image_id, int cluster_id, int index);

struct ClassEval {
    std::string name;
    std::size_t samples = 0;
    ConfusionCounts counts;
    std::optional<double> iou;
};

struct EvalReport {
    std::vector<ClassEval> classes;  // sorted by name
    MeanIou miou;
    std::optional<double> fb_iou;
    std::size_t missing_predictions = 0;
};

/// Pairs masks by relative path under gt_dir. The first subdirectory names the
/// class; files directly under gt_dir belong to class "default". Counts are
/// pooled per class before IoU is taken.
EvalReport cmd_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir);

std::string format_eval_table(const EvalReport& report);
std::string format_eval_records(const EvalReport& report);  // JSON lines

struct SynthCheckResult {
    double iou = 0.0;
    int k_best = 0;
    double seconds = 0.0;
    bool skipped = false;
    bool passed = false;
};

/// Runs the label pipeline on a generated disc scene and scores the most
/// central label against the disc.
SynthCheckResult cmd_synth_check(const RunConfig& cfg, std::uint64_t scene_seed);

/// Silences per-image log output below errors.
void quiet_logging();

}  // namespace ipe::cli
