#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "ipe/feature_io.hpp"

namespace ipe {

/// Pixel counts with foreground = 1.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(const MaskBuffer& pred, const MaskBuffer& gt);

// nullopt marks an undefined IoU (empty union).
std::optional<double> iou(const ConfusionCounts& c);
std::optional<double> background_iou(const ConfusionCounts& c);
/// Mean of foreground and background IoU; undefined if either is.
std::optional<double> fb_iou(const ConfusionCounts& c);

struct MeanIou {
    double value = 0.0;      // NaN when every entry was undefined
    std::size_t included = 0;
    std::size_t excluded = 0;
};

/// Arithmetic mean of the defined entries. Throws InvalidArgument on an empty list.
MeanIou miou(std::span<const std::optional<double>> per_class);

}  // namespace ipe
