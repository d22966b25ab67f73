#pragma once

#include <span>
#include <vector>

namespace dsec::eval {

/// Operating points from the highest threshold down. The first point is
/// (0, 0) at threshold +inf and the last is (1, 1).
struct RocCurve {
    std::vector<double> thresholds;
    std::vector<double> fpr;
    std::vector<double> tpr;
    double auc = 0.0;
};

/// Tied scores cross the threshold together, so a tie between a positive and
/// a negative contributes half a concordant pair. Labels are 0/1; throws
/// DomainError when only one class is present.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

} // namespace dsec::eval
