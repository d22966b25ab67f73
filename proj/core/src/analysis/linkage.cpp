#include "dsec/analysis/linkage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "dsec/error.hpp"

namespace dsec::analysis {

std::vector<std::vector<std::size_t>> LinkageTree::members() const {
    const std::size_t total = leaf_count == 0 ? 0 : 2 * leaf_count - 1;
    std::vector<std::vector<std::size_t>> out(total);
    for (std::size_t i = 0; i < leaf_count; ++i) out[i] = {i};
    for (const auto& m : merges) {
        auto& dst = out[m.new_id];
        dst.reserve(out[m.left].size() + out[m.right].size());
        std::merge(out[m.left].begin(), out[m.left].end(), out[m.right].begin(), out[m.right].end(),
                   std::back_inserter(dst));
    }
    return out;
}

namespace {

// Condensed symmetric matrix of squared Ward "distances" (2·ΔSSE) between
// slots. Slot i initially holds leaf i; a merge stores the new cluster in the
// lower slot and retires the other.
class DistanceTable {
public:
    explicit DistanceTable(std::size_t n) : n_(n), d_(n * (n - 1) / 2, 0.0) {}
    double& at(std::size_t i, std::size_t j) {
        if (i > j) std::swap(i, j);
        return d_[i * n_ - i * (i + 1) / 2 + (j - i - 1)];
    }

private:
    std::size_t n_;
    std::vector<double> d_;
};

} // namespace

LinkageTree agglomerative_ward(const Matrix& points) {
    const std::size_t n = points.rows();
    if (n < 2) throw DomainError(fmt::format("agglomerative_ward: need at least 2 points, got {}", n));

    DistanceTable dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double d = 0.0;
            for (std::size_t c = 0; c < points.cols(); ++c) {
                const double diff = points(i, c) - points(j, c);
                d += diff * diff;
            }
            dist.at(i, j) = d;
        }
    }

    std::vector<std::size_t> id(n), size(n, 1);
    std::iota(id.begin(), id.end(), std::size_t{0});
    std::vector<bool> active(n, true);
    std::vector<std::size_t> nn(n, 0);
    std::vector<double> nn_dist(n, std::numeric_limits<double>::infinity());

    // (distance, partner id) ordering per slot.
    auto better = [&](double d, std::size_t slot, double best_d, std::size_t best_slot) {
        return d < best_d || (d == best_d && id[slot] < id[best_slot]);
    };
    auto refresh = [&](std::size_t i) {
        nn_dist[i] = std::numeric_limits<double>::infinity();
        nn[i] = i;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || !active[j]) continue;
            const double d = dist.at(i, j);
            if (nn[i] == i || better(d, j, nn_dist[i], nn[i])) {
                nn_dist[i] = d;
                nn[i] = j;
            }
        }
    };
    for (std::size_t i = 0; i < n; ++i) refresh(i);

    LinkageTree tree;
    tree.leaf_count = n;
    tree.merges.reserve(n - 1);
    for (std::size_t step = 0; step + 1 < n; ++step) {
        // Global minimum over cached nearest neighbours, ties by (low id, high id).
        std::size_t a = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            if (a == n) {
                a = i;
                continue;
            }
            const std::size_t lo_i = std::min(id[i], id[nn[i]]), hi_i = std::max(id[i], id[nn[i]]);
            const std::size_t lo_a = std::min(id[a], id[nn[a]]), hi_a = std::max(id[a], id[nn[a]]);
            if (nn_dist[i] < nn_dist[a] ||
                (nn_dist[i] == nn_dist[a] && std::pair(lo_i, hi_i) < std::pair(lo_a, hi_a))) {
                a = i;
            }
        }
        std::size_t b = nn[a];
        const double d2 = nn_dist[a];
        if (a > b) std::swap(a, b);  // keep the lower slot

        Merge merge;
        merge.left = std::min(id[a], id[b]);
        merge.right = std::max(id[a], id[b]);
        merge.distance = std::sqrt(std::max(0.0, d2));
        merge.new_id = n + step;
        merge.size = size[a] + size[b];
        tree.merges.push_back(merge);

        // Lance–Williams update for Ward on squared distances.
        const auto na = static_cast<double>(size[a]);
        const auto nb = static_cast<double>(size[b]);
        active[b] = false;
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == a) continue;
            const auto nk = static_cast<double>(size[k]);
            const double updated =
                ((na + nk) * dist.at(a, k) + (nb + nk) * dist.at(b, k) - nk * d2) / (na + nb + nk);
            dist.at(a, k) = std::max(0.0, updated);
        }
        id[a] = merge.new_id;
        size[a] = merge.size;

        refresh(a);
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == a) continue;
            if (nn[k] == a || nn[k] == b) {
                refresh(k);
            } else if (dist.at(a, k) < nn_dist[k]) {
                // Ward is reducible, so this only triggers on rounding.
                nn_dist[k] = dist.at(a, k);
                nn[k] = a;
            }
        }
    }
    return tree;
}

ClusterAssignment cut_tree(const LinkageTree& tree, std::size_t k) {
    const std::size_t n = tree.leaf_count;
    if (k < 1 || k > n) throw DomainError(fmt::format("cut_tree: k = {} outside [1, {}]", k, n));
    std::vector<std::size_t> parent(2 * n - 1);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (std::size_t s = 0; s < n - k; ++s) {
        const auto& m = tree.merges[s];
        parent[m.left] = m.new_id;
        parent[m.right] = m.new_id;
    }
    auto root = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x];
        return x;
    };
    ClusterAssignment out;
    out.k = k;
    out.labels.resize(n);
    std::vector<std::size_t> label_of(2 * n - 1, n);
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = root(i);
        if (label_of[r] == n) label_of[r] = next++;
        out.labels[i] = label_of[r];
    }
    return out;
}

} // namespace dsec::analysis
