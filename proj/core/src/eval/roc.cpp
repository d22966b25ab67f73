#include "dsec/eval/roc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "dsec/error.hpp"

namespace dsec::eval {

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw ShapeError(fmt::format("roc_auc: {} scores for {} labels", scores.size(), labels.size()));
    }
    std::size_t positives = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw DomainError(fmt::format("roc_auc: label {} is not 0/1", labels[i]));
        if (!std::isfinite(scores[i])) throw DomainError("roc_auc: non-finite score");
        positives += static_cast<std::size_t>(labels[i]);
    }
    const std::size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0) throw DomainError("roc_auc: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.thresholds.push_back(std::numeric_limits<double>::infinity());
    curve.fpr.push_back(0.0);
    curve.tpr.push_back(0.0);
    std::size_t tp = 0, fp = 0;
    double area = 0.0;  // in units of (negative, positive) pairs
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        std::size_t group_tp = 0, group_fp = 0;
        for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] == 1 ? group_tp : group_fp) += 1;
        area += static_cast<double>(group_fp) * (static_cast<double>(tp) + 0.5 * static_cast<double>(group_tp));
        tp += group_tp;
        fp += group_fp;
        curve.thresholds.push_back(s);
        curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(negatives));
        curve.tpr.push_back(static_cast<double>(tp) / static_cast<double>(positives));
    }
    curve.auc = area / (static_cast<double>(positives) * static_cast<double>(negatives));
    return curve;
}

} // namespace dsec::eval
