#pragma once

#include <cstdint>

namespace dsec::analysis {

/// 2×2 counts. Rows are the two clusters, columns code present / absent:
///
///              present  absent
///   cluster A     a        b
///   cluster B     c        d
struct ContingencyTable {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    std::uint64_t c = 0;
    std::uint64_t d = 0;

    friend bool operator==(const ContingencyTable&, const ContingencyTable&) = default;
};

struct FisherResult {
    double odds_ratio = 1.0;
    double p_value = 1.0;
};

/// Relative slack when deciding whether a table is as extreme as the observed one.
inline constexpr double kFisherTieTolerance = 1e-7;

/// Two-sided Fisher exact test. The p-value sums the hypergeometric
/// probabilities of every table with the observed margins whose probability is
/// at most the observed one (× (1 + kFisherTieTolerance)). The odds ratio is
/// (a·d)/(b·c), with 0.5 added to every cell when any cell is zero.
FisherResult fisher_exact(const ContingencyTable& table);

/// Natural log of the (Haldane–Anscombe corrected) odds ratio.
double log_odds_ratio(const ContingencyTable& table);

} // namespace dsec::analysis
