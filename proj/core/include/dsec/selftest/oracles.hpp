#pragma once

#include <cstddef>
#include <vector>

#include "dsec/analysis/fisher.hpp"
#include "dsec/analysis/linkage.hpp"
#include "dsec/nn/matrix.hpp"

// Slow reference implementations that share no code with the production
// algorithms they check.
namespace dsec::selftest {

/// Greedy Ward agglomeration recomputing every pairwise merge cost from the
/// cluster members at each step. Ties go to the smallest (left, right) ids.
std::vector<analysis::Merge> brute_force_ward(const Matrix& points);

/// Lowest inertia over every split of the rows into two non-empty groups.
/// Intended for at most ~20 rows.
double optimal_two_means_inertia(const Matrix& points);

/// True when every point is nearest (within `tol`) to its own centroid and
/// each centroid is the mean of its points.
bool is_lloyd_fixed_point(const Matrix& points, const Matrix& centroids, const std::vector<std::size_t>& labels,
                          double tol = 1e-9);

/// Two-sided Fisher p-value from exact integer hypergeometric weights, using
/// the same relative tie slack as the production test. Row and column sums
/// must not exceed 50.
double fisher_p_by_enumeration(const analysis::ContingencyTable& table);

} // namespace dsec::selftest
