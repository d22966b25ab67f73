#include "dsec/selftest/oracles.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "dsec/error.hpp"

namespace dsec::selftest {

namespace {

struct Cluster {
    std::size_t id;
    std::vector<std::size_t> members;
};

std::vector<double> centroid(const Matrix& points, const std::vector<std::size_t>& members) {
    std::vector<double> c(points.cols(), 0.0);
    for (std::size_t r : members)
        for (std::size_t j = 0; j < points.cols(); ++j) c[j] += points(r, j);
    for (double& v : c) v /= static_cast<double>(members.size());
    return c;
}

double sse(const Matrix& points, const std::vector<std::size_t>& members) {
    const auto c = centroid(points, members);
    double total = 0.0;
    for (std::size_t r : members)
        for (std::size_t j = 0; j < points.cols(); ++j) total += (points(r, j) - c[j]) * (points(r, j) - c[j]);
    return total;
}

__extension__ typedef unsigned __int128 u128;

u128 binomial(unsigned n, unsigned k) {
    if (k > n) return 0;
    u128 r = 1;
    for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;  // exact at every step
    return r;
}

} // namespace

std::vector<analysis::Merge> brute_force_ward(const Matrix& points) {
    const std::size_t n = points.rows();
    if (n < 2) throw DomainError("brute_force_ward: need at least 2 points");
    std::vector<Cluster> active;
    for (std::size_t i = 0; i < n; ++i) active.push_back({i, {i}});
    std::vector<analysis::Merge> merges;
    for (std::size_t step = 0; step + 1 < n; ++step) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        // `active` stays sorted by id, so the first strict minimum is the
        // lexicographically smallest pair.
        for (std::size_t i = 0; i < active.size(); ++i) {
            for (std::size_t j = i + 1; j < active.size(); ++j) {
                std::vector<std::size_t> joined = active[i].members;
                joined.insert(joined.end(), active[j].members.begin(), active[j].members.end());
                const double delta = sse(points, joined) - sse(points, active[i].members) - sse(points, active[j].members);
                if (delta < best) {
                    best = delta;
                    bi = i;
                    bj = j;
                }
            }
        }
        analysis::Merge m;
        m.left = active[bi].id;
        m.right = active[bj].id;
        m.distance = std::sqrt(2.0 * std::max(0.0, best));
        m.new_id = n + step;
        Cluster merged{m.new_id, active[bi].members};
        merged.members.insert(merged.members.end(), active[bj].members.begin(), active[bj].members.end());
        m.size = merged.members.size();
        merges.push_back(m);
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
        active.push_back(std::move(merged));
    }
    return merges;
}

double optimal_two_means_inertia(const Matrix& points) {
    const std::size_t n = points.rows();
    if (n < 2 || n > 20) throw DomainError(fmt::format("optimal_two_means_inertia: {} rows", n));
    double best = std::numeric_limits<double>::infinity();
    // Point n−1 always sits in group 1 so each split is visited once.
    for (std::uint32_t bits = 1; bits < (1u << (n - 1)); ++bits) {
        std::vector<std::size_t> g0, g1{n - 1};
        for (std::size_t i = 0; i + 1 < n; ++i) ((bits >> i) & 1u ? g0 : g1).push_back(i);
        best = std::min(best, sse(points, g0) + sse(points, g1));
    }
    return best;
}

bool is_lloyd_fixed_point(const Matrix& points, const Matrix& centroids, const std::vector<std::size_t>& labels,
                          double tol) {
    const std::size_t k = centroids.rows();
    std::vector<std::vector<std::size_t>> groups(k);
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
    for (std::size_t c = 0; c < k; ++c) {
        if (groups[c].empty()) return false;
        const auto mean = centroid(points, groups[c]);
        for (std::size_t j = 0; j < points.cols(); ++j)
            if (std::abs(mean[j] - centroids(c, j)) > tol) return false;
    }
    for (std::size_t i = 0; i < points.rows(); ++i) {
        auto dist = [&](std::size_t c) {
            double d = 0.0;
            for (std::size_t j = 0; j < points.cols(); ++j) d += (points(i, j) - centroids(c, j)) * (points(i, j) - centroids(c, j));
            return d;
        };
        const double own = dist(labels[i]);
        for (std::size_t c = 0; c < k; ++c)
            if (dist(c) < own - tol) return false;
    }
    return true;
}

double fisher_p_by_enumeration(const analysis::ContingencyTable& t) {
    const auto row1 = static_cast<unsigned>(t.a + t.b);
    const auto row2 = static_cast<unsigned>(t.c + t.d);
    const auto col1 = static_cast<unsigned>(t.a + t.c);
    if (row1 > 50 || row2 > 50 || col1 > 50 || t.b + t.d > 50) {
        throw DomainError("fisher_p_by_enumeration: margins above 50");
    }
    const unsigned lo = col1 > row2 ? col1 - row2 : 0;
    const unsigned hi = std::min(row1, col1);
    const u128 observed = binomial(row1, static_cast<unsigned>(t.a)) * binomial(row2, static_cast<unsigned>(t.c));
    // w ≤ observed · (1 + 1e-7), compared exactly.
    const u128 scale = 10'000'000;
    u128 total = 0, extreme = 0;
    for (unsigned k = lo; k <= hi; ++k) {
        const u128 w = binomial(row1, k) * binomial(row2, col1 - k);
        total += w;
        if (w * scale <= observed * (scale + 1)) extreme += w;
    }
    return static_cast<double>(static_cast<long double>(extreme) / static_cast<long double>(total));
}

} // namespace dsec::selftest
