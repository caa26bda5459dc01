#include "ipe/metrics.hpp"

#include <limits>

#include "ipe/error.hpp"

namespace ipe {

ConfusionCounts confusion(const MaskBuffer& pred, const MaskBuffer& gt) {
    if (pred.height != gt.height || pred.width != gt.width || pred.pixels.size() != gt.pixels.size())
        throw Error(ErrorCode::DimMismatch, "prediction and ground truth dims differ");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.pixels.size(); ++i) {
        const bool p = pred.pixels[i] != 0;
        const bool g = gt.pixels[i] != 0;
        if (p && g) ++c.tp;
        else if (p) ++c.fp;
        else if (g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

std::optional<double> iou(const ConfusionCounts& c) {
    const std::uint64_t uni = c.tp + c.fp + c.fn;
    if (uni == 0) return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(uni);
}

std::optional<double> background_iou(const ConfusionCounts& c) {
    return iou(ConfusionCounts{c.tn, c.fn, c.fp, c.tp});
}

std::optional<double> fb_iou(const ConfusionCounts& c) {
    const auto fg = iou(c);
    const auto bg = background_iou(c);
    if (!fg || !bg) return std::nullopt;
    return (*fg + *bg) / 2.0;
}

MeanIou miou(std::span<const std::optional<double>> per_class) {
    if (per_class.empty()) throw Error(ErrorCode::InvalidArgument, "mIoU of an empty class list");
    MeanIou m;
    double sum = 0.0;
    for (const auto& v : per_class) {
        if (v) {
            sum += *v;
            ++m.included;
        } else {
            ++m.excluded;
        }
    }
    m.value = m.included ? sum / static_cast<double>(m.included) : std::numeric_limits<double>::quiet_NaN();
    return m;
}

}  // namespace ipe
