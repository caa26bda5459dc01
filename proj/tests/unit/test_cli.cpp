#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "ipe/error.hpp"
#include "ipe/feature_io.hpp"
#include "ipe/synthetic.hpp"
#include "oracles.hpp"
#include "run_config.hpp"

namespace ipe::cli {
namespace {

using ipe::testing::snapshot_tree;
using ipe::testing::TempDir;
namespace fs = std::filesystem;

constexpr std::uint32_t kSmall = 168;

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

/// images/<stem>.png and features/<stem>.fmap for `count` synthetic scenes.
RunConfig synthetic_inputs(const fs::path& root, int count) {
    RunConfig cfg;
    cfg.image_dir = root / "images";
    cfg.feature_dir = root / "features";
    cfg.output_dir = root / "out";
    cfg.pgm.input_size = kSmall;
    fs::create_directories(cfg.image_dir);
    fs::create_directories(cfg.feature_dir);
    SyntheticSceneSpec spec;
    spec.image_size = kSmall;
    for (int i = 0; i < count; ++i) {
        const auto scene = make_disc_scene(static_cast<std::uint64_t>(100 + i), spec);
        const std::string stem = "scene" + std::to_string(i);
        save_image(scene.image, cfg.image_dir / (stem + ".png"));
        save_feature_map(scene.features, cfg.feature_dir / (stem + ".fmap"));
    }
    return cfg;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(IPE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(RunConfig, DefaultsSerializeVerbatim) {
    const std::string text = serialize(RunConfig{});
    for (const char* line : {"pgm.m = 3\n", "pgm.n = 5\n", "pgm.t = 2\n", "pgm.input_size = 672\n", "egm.out_size = 225\n",
                             "egm.crop.p = 1\n", "egm.rotation.p = 0.4\n", "egm.jitter.p = 0.8\n",
                             "egm.grayscale.p = 0.2\n", "egm.blur.p = 0.8\n", "egm.flip.p = 0.5\n",
                             "episodes.k_shot = 1\n"})
        EXPECT_NE(text.find(line), std::string::npos) << line;
}

TEST(RunConfig, RoundTripIsIdentity) {
    RunConfig cfg;
    cfg.image_dir = "/data/images";
    cfg.output_dir = "out dir";
    cfg.global_seed = 0xFFFFFFFFFFFFFFFFull;
    cfg.pgm.min_frac = 0.1 + 0.2;  // not exactly representable as a short decimal
    cfg.pgm.crf.filter = CrfFilter::Approximate;
    cfg.pgm.crf.theta_beta = 1.0 / 3.0;
    cfg.episodes.transforms.crop.ratio_min = 3.0 / 4.0;
    cfg.k_shot = 5;
    cfg.limit = 12;
    const auto parsed = parse_config(serialize(cfg));
    EXPECT_EQ(parsed, cfg);
    EXPECT_EQ(serialize(parsed), serialize(cfg));
    EXPECT_EQ(parse_config(serialize(RunConfig{})), RunConfig{});
}

TEST(RunConfig, CommentsBlankLinesAndPartialFiles) {
    const auto cfg = parse_config("# comment\n\n  pgm.t = 1  \nrun.workers=4\n");
    EXPECT_EQ(cfg.pgm.t, 1);
    EXPECT_EQ(cfg.workers, 4);
    EXPECT_EQ(cfg.pgm.m, 3);
}

TEST(RunConfig, ErrorsAreConfigErrors) {
    for (const char* text : {"nonsense.key = 1\n", "pgm.m = three\n", "pgm.m\n", "crf.filter = fast\n", "pgm.m = 3.5\n"}) {
        try {
            parse_config(text);
            ADD_FAILURE() << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::ConfigError) << text;
        }
    }
    RunConfig cfg;
    cfg.k_shot = 0;
    EXPECT_THROW(validate(cfg), Error);
}

TEST(GenLabels, EmptyInputDir) {
    TempDir dir("cli_empty");
    auto cfg = synthetic_inputs(dir.path(), 0);
    const auto s = cmd_gen_labels(cfg);
    EXPECT_EQ(s.images, 0u);
    EXPECT_EQ(s.labels, 0u);
    EXPECT_EQ(s.skipped, 0u);
    EXPECT_TRUE(fs::exists(cfg.output_dir / "labels" / "labels.manifest"));
}

TEST(GenLabels, SyntheticImageAndMissingFeatures) {
    TempDir dir("cli_labels");
    auto cfg = synthetic_inputs(dir.path(), 2);
    fs::remove(cfg.feature_dir / "scene1.fmap");
    const auto s = cmd_gen_labels(cfg);
    EXPECT_EQ(s.images, 2u);
    EXPECT_EQ(s.labeled_images, 1u);
    EXPECT_GE(s.labels, 1u);
    EXPECT_LE(s.labels, 2u);
    EXPECT_EQ(s.skipped, 1u);
    EXPECT_EQ(s.skip_reasons.at("IoFailure"), 1u);
    const fs::path labels = cfg.output_dir / "labels";
    EXPECT_TRUE(fs::exists(labels / "scene0.meta"));
    EXPECT_NE(read_file(labels / "scene1.meta").find("missing feature map"), std::string::npos);
    const auto manifest = read_file(labels / "labels.manifest");
    EXPECT_NE(manifest.find("scene0\tscene0.png\t"), std::string::npos);
    EXPECT_EQ(manifest.find("scene1"), std::string::npos);
    EXPECT_NE(read_file(labels / "summary.txt").find("skipped.IoFailure=1"), std::string::npos);
}

TEST(GenLabels, LimitTakesFirstImages) {
    TempDir dir("cli_limit");
    auto cfg = synthetic_inputs(dir.path(), 3);
    cfg.limit = 1;
    EXPECT_EQ(cmd_gen_labels(cfg).images, 1u);
    EXPECT_TRUE(fs::exists(cfg.output_dir / "labels" / "scene0.meta"));
    EXPECT_FALSE(fs::exists(cfg.output_dir / "labels" / "scene1.meta"));
}

TEST(GenLabels, CorruptImageDoesNotAbortBatch) {
    TempDir dir("cli_corrupt");
    auto cfg = synthetic_inputs(dir.path(), 1);
    write_file(cfg.image_dir / "broken.png", "not a png");
    write_file(cfg.feature_dir / "broken.fmap", "FMAPjunk");
    const auto s = cmd_gen_labels(cfg);
    EXPECT_EQ(s.images, 2u);
    EXPECT_EQ(s.skipped, 1u);
    EXPECT_EQ(s.labeled_images, 1u);
}

TEST(GenLabels, MissingDirectoryIsConfigError) {
    RunConfig cfg;
    cfg.image_dir = "/nonexistent/images";
    cfg.feature_dir = "/nonexistent/features";
    cfg.output_dir = "/tmp/unused";
    try {
        cmd_gen_labels(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    }
}

TEST(GenLabels, WorkerCountDoesNotChangeOutput) {
    TempDir a("cli_w1"), b("cli_w4");
    auto cfg_a = synthetic_inputs(a.path(), 3);
    auto cfg_b = synthetic_inputs(b.path(), 3);
    cfg_a.workers = 1;
    cfg_b.workers = 4;
    cmd_gen_labels(cfg_a);
    cmd_gen_labels(cfg_b);
    EXPECT_EQ(snapshot_tree(cfg_a.output_dir), snapshot_tree(cfg_b.output_dir));
}

TEST(GenEpisodes, CountsLayoutAndDeterminism) {
    TempDir dir("cli_episodes");
    auto cfg = synthetic_inputs(dir.path(), 1);
    cfg.pgm.t = 1;
    ASSERT_EQ(cmd_gen_labels(cfg).labels, 1u);
    cfg.episodes_per_label = 3;
    const auto s = cmd_gen_episodes(cfg);
    EXPECT_EQ(s.labels, 1u);
    EXPECT_EQ(s.episodes, 3u);
    EXPECT_EQ(s.failed, 0u);
    const fs::path episodes = cfg.output_dir / "episodes";
    int dirs = 0;
    for (const auto& e : fs::directory_iterator(episodes)) dirs += e.is_directory();
    EXPECT_EQ(dirs, 3);
    const auto manifest = read_file(episodes / "episodes.manifest");
    EXPECT_EQ(manifest.rfind(std::string(kEpisodeManifestHeader), 0), 0u);
    const auto first = snapshot_tree(episodes);
    cfg.workers = 3;
    cmd_gen_episodes(cfg);
    EXPECT_EQ(snapshot_tree(episodes), first);
}

TEST(GenEpisodes, FiveShotWritesSixViews) {
    TempDir dir("cli_k5");
    auto cfg = synthetic_inputs(dir.path(), 1);
    cfg.pgm.t = 1;
    cmd_gen_labels(cfg);
    cfg.k_shot = 5;
    ASSERT_EQ(cmd_gen_episodes(cfg).episodes, 1u);
    fs::path ep;
    for (const auto& e : fs::directory_iterator(cfg.output_dir / "episodes"))
        if (e.is_directory()) ep = e.path();
    ASSERT_EQ(ep.filename().string().rfind("scene0_c", 0), 0u);
    int images = 0;
    for (const auto& e : fs::directory_iterator(ep)) images += e.path().filename().string().find("mask") == std::string::npos;
    EXPECT_EQ(images, 6);
    EXPECT_TRUE(fs::exists(ep / "support_5_mask.png"));
}

TEST(GenEpisodes, SeedDependsOnIdentityOnly) {
    EXPECT_EQ(episode_seed(1, "a", 0, 0), episode_seed(1, "a", 0, 0));
    EXPECT_NE(episode_seed(1, "a", 0, 0), episode_seed(2, "a", 0, 0));
    EXPECT_NE(episode_seed(1, "a", 0, 0), episode_seed(1, "b", 0, 0));
    EXPECT_NE(episode_seed(1, "a", 0, 0), episode_seed(1, "a", 1, 0));
    EXPECT_NE(episode_seed(1, "a", 0, 0), episode_seed(1, "a", 0, 1));
}

TEST(GenEpisodes, MissingManifestIsConfigError) {
    TempDir dir("cli_nomanifest");
    auto cfg = synthetic_inputs(dir.path(), 0);
    try {
        cmd_gen_episodes(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    }
}

MaskBuffer block(std::uint32_t top, std::uint32_t left) {
    MaskBuffer m(4, 4);
    for (std::uint32_t y = top; y < top + 2; ++y)
        for (std::uint32_t x = left; x < left + 2; ++x) m.at(y, x) = 1;
    return m;
}

TEST(Eval, IdenticalDisjointAndShifted) {
    TempDir dir("cli_eval");
    const fs::path gt = dir.path() / "gt", same = dir.path() / "same", disjoint = dir.path() / "disjoint",
                   shifted = dir.path() / "shifted";
    for (const auto& d : {gt, same, disjoint, shifted}) fs::create_directories(d);
    save_mask(block(1, 1), gt / "a.png");
    save_mask(block(1, 1), same / "a.png");
    save_mask(block(0, 0), shifted / "a.png");
    MaskBuffer outside(4, 4);
    outside.at(3, 0) = 1;
    save_mask(outside, disjoint / "a.png");

    EXPECT_EQ(cmd_eval(same, gt).miou.value, 1.0);
    EXPECT_EQ(cmd_eval(disjoint, gt).miou.value, 0.0);
    const auto r = cmd_eval(shifted, gt);
    EXPECT_EQ(r.miou.value, 1.0 / 7.0);
    EXPECT_EQ(*r.fb_iou, (1.0 / 7.0 + 0.6) / 2.0);
    ASSERT_EQ(r.classes.size(), 1u);
    EXPECT_EQ(r.classes[0].name, "default");
}

TEST(Eval, ClassesFromSubdirectoriesAndRecords) {
    TempDir dir("cli_eval_cls");
    const fs::path gt = dir.path() / "gt", pred = dir.path() / "pred";
    for (const char* cls : {"cat", "dog"}) {
        fs::create_directories(gt / cls);
        fs::create_directories(pred / cls);
    }
    save_mask(block(0, 0), gt / "cat" / "1.png");
    save_mask(block(0, 0), pred / "cat" / "1.png");
    save_mask(block(0, 0), gt / "dog" / "1.png");
    save_mask(block(2, 2), pred / "dog" / "1.png");
    save_mask(block(2, 2), gt / "dog" / "2.png");  // no prediction
    const auto r = cmd_eval(pred, gt);
    ASSERT_EQ(r.classes.size(), 2u);
    EXPECT_EQ(r.classes[0].name, "cat");
    EXPECT_EQ(*r.classes[0].iou, 1.0);
    EXPECT_EQ(*r.classes[1].iou, 0.0);
    EXPECT_EQ(r.miou.value, 0.5);
    EXPECT_EQ(r.missing_predictions, 1u);
    const auto records = format_eval_records(r);
    EXPECT_NE(records.find("\"class\":\"cat\""), std::string::npos);
    EXPECT_NE(records.find("\"miou\":0.5"), std::string::npos);
    EXPECT_NE(format_eval_table(r).find("mIoU"), std::string::npos);
}

TEST(SynthCheck, SmallScenePasses) {
    RunConfig cfg;
    cfg.pgm.input_size = kSmall;
    const auto r = cmd_synth_check(cfg, 3);
    EXPECT_TRUE(r.passed);
    EXPECT_GE(r.iou, 0.9);
}

TEST(Binary, ExitCodes) {
    TempDir dir("cli_bin");
    EXPECT_EQ(run_cli("--print-config"), 0);
    EXPECT_EQ(run_cli("gen-labels --images /nonexistent --features /nonexistent --out " + dir.path().string()), 2);
    EXPECT_EQ(run_cli("--set pgm.m=9 --print-config"), 2);
    EXPECT_NE(run_cli("no-such-command"), 0);
    write_file(dir.path() / "run.cfg", "pgm.input_size = 168\n");
    EXPECT_EQ(run_cli("--config " + (dir.path() / "run.cfg").string() + " synth-check"), 0);
}

TEST(Binary, GenLabelsThroughFlags) {
    TempDir dir("cli_bin_labels");
    auto cfg = synthetic_inputs(dir.path(), 1);
    EXPECT_EQ(run_cli("--set pgm.input_size=168 --workers 2 gen-labels --images " + cfg.image_dir.string() +
                      " --features " + cfg.feature_dir.string() + " --out " + cfg.output_dir.string()),
              0);
    EXPECT_TRUE(fs::exists(cfg.output_dir / "labels" / "scene0.meta"));
}

}  // namespace
}  // namespace ipe::cli
