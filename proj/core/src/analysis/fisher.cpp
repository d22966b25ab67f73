#include "dsec/analysis/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dsec/error.hpp"

namespace dsec::analysis {

namespace {

double corrected_odds_ratio(const ContingencyTable& t) {
    double a = static_cast<double>(t.a), b = static_cast<double>(t.b);
    double c = static_cast<double>(t.c), d = static_cast<double>(t.d);
    if (t.a == 0 || t.b == 0 || t.c == 0 || t.d == 0) {
        a += 0.5;
        b += 0.5;
        c += 0.5;
        d += 0.5;
    }
    return (a * d) / (b * c);
}

} // namespace

double log_odds_ratio(const ContingencyTable& table) { return std::log(corrected_odds_ratio(table)); }

FisherResult fisher_exact(const ContingencyTable& t) {
    const std::uint64_t row_a = t.a + t.b;
    const std::uint64_t row_b = t.c + t.d;
    const std::uint64_t present = t.a + t.c;
    const std::uint64_t absent = t.b + t.d;
    if (row_a == 0 || row_b == 0 || present == 0 || absent == 0) {
        throw DomainError("fisher_exact: every margin must be positive");
    }

    // a ranges over [lo, hi]; weights are hypergeometric probabilities up to a
    // common factor, built outward from the mode by the ratio recurrence
    //   w(x+1)/w(x) = (row_a − x)(present − x) / ((x+1)(row_b − present + x + 1)).
    const std::uint64_t lo = present > row_b ? present - row_b : 0;
    const std::uint64_t hi = std::min(row_a, present);
    const double n = static_cast<double>(row_a + row_b);
    auto mode = static_cast<std::uint64_t>(
        std::floor((static_cast<double>(present) + 1.0) * (static_cast<double>(row_a) + 1.0) / (n + 2.0)));
    mode = std::clamp(mode, lo, hi);

    std::vector<double> w(hi - lo + 1, 0.0);
    w[mode - lo] = 1.0;
    for (std::uint64_t x = mode; x < hi; ++x) {
        const double num = static_cast<double>(row_a - x) * static_cast<double>(present - x);
        const double den = static_cast<double>(x + 1) * static_cast<double>(row_b - present + x + 1);
        w[x + 1 - lo] = w[x - lo] * num / den;
    }
    for (std::uint64_t x = mode; x > lo; --x) {
        const double num = static_cast<double>(x) * static_cast<double>(row_b - present + x);
        const double den = static_cast<double>(row_a - x + 1) * static_cast<double>(present - x + 1);
        w[x - 1 - lo] = w[x - lo] * num / den;
    }

    const double observed = w[t.a - lo] * (1.0 + kFisherTieTolerance);
    double extreme = 0.0, total = 0.0;
    for (double v : w) {
        total += v;
        if (v <= observed) extreme += v;
    }
    return {corrected_odds_ratio(t), std::min(1.0, extreme / total)};
}

} // namespace dsec::analysis
