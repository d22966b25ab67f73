#include "dsec/analysis/enrichment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dsec/error.hpp"

namespace dsec::analysis {

CodeSet make_code_set(std::vector<std::string> codes) {
    std::sort(codes.begin(), codes.end());
    codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
    return codes;
}

std::vector<EnrichmentRecord> enrich_pairwise(std::span<const CodeSet> group_a, std::span<const CodeSet> group_b,
                                              double alpha) {
    if (group_a.empty() || group_b.empty()) throw DomainError("enrich_pairwise: both clusters must be non-empty");

    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> counts;
    for (const auto& codes : group_a)
        for (const auto& c : codes) ++counts[c].first;
    for (const auto& codes : group_b)
        for (const auto& c : codes) ++counts[c].second;

    const auto n_a = static_cast<std::uint64_t>(group_a.size());
    const auto n_b = static_cast<std::uint64_t>(group_b.size());
    const auto tests = static_cast<double>(counts.size());
    std::vector<EnrichmentRecord> records;
    records.reserve(counts.size());
    for (const auto& [code, count] : counts) {
        EnrichmentRecord r;
        r.code = code;
        r.table = {count.first, n_a - count.first, count.second, n_b - count.second};
        r.log_odds = log_odds_ratio(r.table);
        // A code present (or absent) in every patient of both groups has a
        // zero margin; it carries no evidence either way.
        const bool degenerate = count.first + count.second == n_a + n_b;
        r.p_value = degenerate ? 1.0 : fisher_exact(r.table).p_value;
        r.p_adjusted = std::min(1.0, r.p_value * tests);
        r.enriched_in = r.log_odds < 0.0 ? Side::b : Side::a;
        r.significant = r.p_adjusted < alpha;
        records.push_back(std::move(r));
    }
    std::stable_sort(records.begin(), records.end(), [](const EnrichmentRecord& x, const EnrichmentRecord& y) {
        const double ax = std::abs(x.log_odds), ay = std::abs(y.log_odds);
        if (ax != ay) return ax > ay;
        return x.code < y.code;
    });
    return records;
}

std::vector<MergeReport> hierarchical_enrichment(const LinkageTree& tree, std::span<const CodeSet> codes,
                                                 const HierarchyOptions& options) {
    if (codes.size() != tree.leaf_count) {
        throw ShapeError(fmt::format("hierarchical_enrichment: {} code sets for {} leaves", codes.size(),
                                     tree.leaf_count));
    }
    std::vector<MergeReport> reports;
    if (tree.merges.empty()) return reports;

    const auto members = tree.members();
    const std::size_t n = tree.leaf_count;
    // (cluster id, its path) pending expansion, processed breadth-first.
    std::vector<std::pair<std::size_t, std::string>> frontier{{tree.merges.back().new_id, ""}};
    for (std::size_t head = 0; head < frontier.size(); ++head) {
        const auto [cluster, path] = frontier[head];
        if (cluster < n) continue;
        const std::size_t merge_index = cluster - n;
        const Merge& m = tree.merges[merge_index];
        const std::size_t depth = path.empty() ? 1 : static_cast<std::size_t>(std::count(path.begin(), path.end(), '.')) + 2;
        if (depth > options.depth) continue;

        MergeReport report;
        report.merge_index = merge_index;
        report.left_path = path.empty() ? "1" : path + ".1";
        report.right_path = path.empty() ? "2" : path + ".2";
        report.left_members = members[m.left];
        report.right_members = members[m.right];
        report.left_size = report.left_members.size();
        report.right_size = report.right_members.size();
        report.skipped = report.left_size < options.min_cluster_size || report.right_size < options.min_cluster_size;
        if (!report.skipped) {
            std::vector<CodeSet> a, b;
            a.reserve(report.left_size);
            b.reserve(report.right_size);
            for (std::size_t leaf : report.left_members) a.push_back(codes[leaf]);
            for (std::size_t leaf : report.right_members) b.push_back(codes[leaf]);
            report.records = enrich_pairwise(a, b, options.alpha);
        }
        frontier.emplace_back(m.left, report.left_path);
        frontier.emplace_back(m.right, report.right_path);
        reports.push_back(std::move(report));
    }
    return reports;
}

void write_enrichment_csv(std::ostream& out, std::span<const MergeReport> reports) {
    out << "group_path,code,log_odds,p_value,p_adjusted,enriched_in\n";
    for (const auto& report : reports) {
        if (report.skipped) continue;
        for (const auto& r : report.records) {
            fmt::print(out, "{},{},{:.6f},{:.6e},{:.6e},{}\n", report.label(), r.code, std::abs(r.log_odds), r.p_value,
                       r.p_adjusted, report.path_of(r.enriched_in));
        }
    }
}

void write_enrichment_table(std::ostream& out, std::span<const MergeReport> reports) {
    // Collect per-group lines in report order; a group appears once per
    // comparison it took part in.
    fmt::print(out, "{:<12} {}\n", "Group", "Enriched codes (log odds ratio)");
    fmt::print(out, "{}\n", std::string(60, '-'));
    for (const auto& report : reports) {
        if (report.skipped) {
            fmt::print(out, "{:<12} (skipped: sizes {} and {})\n", report.label(), report.left_size,
                       report.right_size);
            fmt::print(out, "{}\n", std::string(60, '-'));
            continue;
        }
        for (Side side : {Side::a, Side::b}) {
            bool first = true;
            for (const auto& r : report.records) {
                if (!r.significant || r.enriched_in != side) continue;
                fmt::print(out, "{:<12} {} ({:.2f})\n", first ? report.path_of(side) : "", r.code, std::abs(r.log_odds));
                first = false;
            }
            if (first) fmt::print(out, "{:<12}\n", report.path_of(side));
            fmt::print(out, "{}\n", std::string(60, '-'));
        }
    }
}

} // namespace dsec::analysis
