#include "ipe/pgm.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "ipe/affinity.hpp"

namespace ipe {

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool is_skip_reason(ErrorCode code) {
    switch (code) {
        case ErrorCode::ZeroNormPixel:
        case ErrorCode::IsolatedVertex:
        case ErrorCode::EigFailure:
        case ErrorCode::AllDegenerate:
            return true;
        default:
            return false;
    }
}

}  // namespace

void validate(const PgmConfig& cfg) {
    if (cfg.input_size == 0) throw Error(ErrorCode::InvalidArgument, "input_size must be positive");
    if (cfg.m < 2 || cfg.m > cfg.n) throw Error(ErrorCode::InvalidArgument, "require 2 <= m <= n");
    if (cfg.t < 1) throw Error(ErrorCode::InvalidArgument, "t must be >= 1");
    if (!(cfg.min_frac >= 0.0) || !(cfg.max_frac <= 1.0) || !(cfg.min_frac <= cfg.max_frac))
        throw Error(ErrorCode::InvalidArgument, "require 0 <= min_frac <= max_frac <= 1");
    validate(cfg.spectral);
    validate(cfg.crf);
}

std::string_view to_string(ClusterOutcome o) noexcept {
    switch (o) {
        case ClusterOutcome::Selected: return "selected";
        case ClusterOutcome::TooSmall: return "too_small";
        case ClusterOutcome::TooLarge: return "too_large";
        case ClusterOutcome::BeyondTopT: return "beyond_top_t";
    }
    return "unknown";
}

PgmReport run_pgm(const ImageBuffer& img, const FeatureMap& f, const PgmConfig& cfg, const std::string& image_id) {
    validate(cfg);
    if (img.height != cfg.input_size || img.width != cfg.input_size || img.pixels.size() != img.pixel_count() * 3)
        throw Error(ErrorCode::InvalidArgument, "image must be resized to " + std::to_string(cfg.input_size) + "x" +
                                                    std::to_string(cfg.input_size) + " first");
    validate(f);
    if (f.height > img.height || f.width > img.width)
        throw Error(ErrorCode::InvalidArgument, "feature grid larger than the image");

    PgmReport report;
    report.image_id = image_id;
    try {
        const AffinityMap affinity = compute_affinity(f);
        Selection sel = select_best_k(affinity, f, cfg.m, cfg.n, cfg.spectral);
        report.k_best = sel.best.k;
        report.best_score = sel.best_score;
        report.candidates = std::move(sel.candidates);

        const auto coarse = upsample_labels(sel.best, img.height, img.width);
        const auto unary = labels_to_unary(coarse, img.height, img.width, sel.best.k, cfg.crf.label_smooth_eps);
        const auto refined = mean_field_refine(img, unary, cfg.crf);

        const auto ranking = centrality_rank(refined.labels, img.height, img.width);
        const auto picked = pick_top_t(ranking, cfg.t, cfg.min_frac, cfg.max_frac, img.pixel_count());

        const double lo = cfg.min_frac * static_cast<double>(img.pixel_count());
        const double hi = cfg.max_frac * static_cast<double>(img.pixel_count());
        for (const auto& e : ranking.entries) {
            ClusterAudit audit{e, ClusterOutcome::BeyondTopT};
            const auto size = static_cast<double>(e.pixel_count);
            if (std::find(picked.begin(), picked.end(), e.cluster_id) != picked.end()) audit.outcome = ClusterOutcome::Selected;
            else if (size < lo) audit.outcome = ClusterOutcome::TooSmall;
            else if (size > hi) audit.outcome = ClusterOutcome::TooLarge;
            report.clusters.push_back(audit);
        }

        if (picked.empty()) {
            report.skip_reason = ErrorCode::EmptyPick;
            report.skip_detail = "no cluster passed the size filter";
            return report;
        }
        for (int id : picked) {
            PseudoLabel label;
            label.mask = MaskBuffer(img.height, img.width);
            for (std::size_t p = 0; p < refined.labels.size(); ++p) label.mask.pixels[p] = refined.labels[p] == id ? 1 : 0;
            label.source_image_id = image_id;
            label.cluster_id = id;
            label.d_q = std::find_if(ranking.entries.begin(), ranking.entries.end(),
                                     [id](const CentralityEntry& e) { return e.cluster_id == id; })->d_q;
            label.ch_of_best = report.best_score.value;
            label.k_best = report.k_best;
            report.labels.push_back(std::move(label));
        }
    } catch (const Error& e) {
        if (!is_skip_reason(e.code())) throw;
        report.skip_reason = e.code();
        report.skip_detail = e.what();
        report.labels.clear();
    }
    return report;
}

std::vector<PseudoLabel> generate_pseudo_labels(const ImageBuffer& img, const FeatureMap& f, const PgmConfig& cfg,
                                                const std::string& image_id) {
    auto report = run_pgm(img, f, cfg, image_id);
    if (report.skipped()) throw SkippedImage(*report.skip_reason, report.skip_detail);
    return std::move(report.labels);
}

std::string format_sidecar(const PgmReport& report) {
    std::ostringstream out;
    out << "image_id=" << report.image_id << '\n';
    out << "status=" << (report.skipped() ? "skipped" : "ok") << '\n';
    if (report.skipped()) {
        out << "skip_reason=" << to_string(*report.skip_reason) << '\n';
        out << "skip_detail=" << report.skip_detail << '\n';
    }
    if (report.k_best > 0) {
        out << "k_best=" << report.k_best << '\n';
        out << "ch_best=" << (report.best_score.perfect_separation ? "inf" : format_double(report.best_score.value)) << '\n';
    }
    for (const auto& c : report.candidates) {
        out << "ch.k" << c.k << '=';
        if (!c.score) out << "failed:" << c.failure;
        else if (c.score->perfect_separation) out << "inf";
        else out << format_double(c.score->value);
        out << '\n';
    }
    for (const auto& c : report.clusters) {
        const std::string key = "cluster." + std::to_string(c.entry.cluster_id);
        out << key << ".d_q=" << format_double(c.entry.d_q) << '\n';
        out << key << ".pixels=" << c.entry.pixel_count << '\n';
        out << key << ".outcome=" << to_string(c.outcome) << '\n';
    }
    out << "labels=";
    for (std::size_t i = 0; i < report.labels.size(); ++i) out << (i ? "," : "") << report.labels[i].cluster_id;
    out << '\n';
    return out.str();
}

}  // namespace ipe
