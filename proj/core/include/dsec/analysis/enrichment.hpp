#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dsec/analysis/fisher.hpp"
#include "dsec/analysis/linkage.hpp"

namespace dsec::analysis {

/// Sorted, de-duplicated diagnosis codes of one patient.
using CodeSet = std::vector<std::string>;

CodeSet make_code_set(std::vector<std::string> codes);

enum class Side { a, b };

struct EnrichmentRecord {
    std::string code;
    ContingencyTable table;
    double log_odds = 0.0;  // log OR of A relative to B; > 0 means more frequent in A
    double p_value = 1.0;
    double p_adjusted = 1.0;  // min(1, p · tests)
    Side enriched_in = Side::a;
    bool significant = false;
};

/// Fisher exact test of every code seen in either group, Bonferroni-corrected
/// by the number of codes tested. Records are sorted by descending |log_odds|,
/// then by code.
std::vector<EnrichmentRecord> enrich_pairwise(std::span<const CodeSet> group_a, std::span<const CodeSet> group_b,
                                              double alpha);

struct HierarchyOptions {
    std::size_t depth = 4;               // deepest group path length reported ("2.1.1.1" = 4)
    std::size_t min_cluster_size = 10;   // both sides must reach this size
    double alpha = 0.05;
};

/// Enrichment between the two clusters joined by one merge. Group paths use
/// dotted numbering: the root splits into "1" and "2", "2" into "2.1" and
/// "2.2", and so on; the child with the lower cluster id takes suffix 1.
struct MergeReport {
    std::size_t merge_index = 0;
    std::string left_path;
    std::string right_path;
    std::size_t left_size = 0;
    std::size_t right_size = 0;
    std::vector<std::size_t> left_members;
    std::vector<std::size_t> right_members;
    bool skipped = false;  // a side is below min_cluster_size
    std::vector<EnrichmentRecord> records;

    std::string label() const { return left_path + " vs " + right_path; }
    const std::string& path_of(Side s) const { return s == Side::a ? left_path : right_path; }
};

/// Walks the tree top-down from the root and runs enrich_pairwise on every
/// merge whose child paths are no deeper than `options.depth`. `codes` is
/// indexed by leaf id.
std::vector<MergeReport> hierarchical_enrichment(const LinkageTree& tree, std::span<const CodeSet> codes,
                                                 const HierarchyOptions& options);

/// CSV with header group_path,code,log_odds,p_value,p_adjusted,enriched_in.
/// log_odds is reported for the enriched cluster (non-negative). Skipped
/// merges produce no rows.
void write_enrichment_csv(std::ostream& out, std::span<const MergeReport> reports);

/// Significant codes per group, strongest first, one block per merge side.
void write_enrichment_table(std::ostream& out, std::span<const MergeReport> reports);

} // namespace dsec::analysis
