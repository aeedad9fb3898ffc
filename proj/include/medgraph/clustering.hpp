#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "medgraph/embedding.hpp"

namespace mg {

enum class Linkage { average, complete };

inline Linkage linkage_from_string(std::string_view s) {
    if (s == "average") return Linkage::average;
    if (s == "complete") return Linkage::complete;
    throw InvalidConfigError("unknown linkage: " + std::string(s));
}

struct ClusterAssignment {
    std::vector<std::size_t> member_to_cluster;      // member index -> cluster id
    std::vector<std::vector<std::size_t>> clusters;  // cluster id -> sorted member list
    std::vector<std::vector<double>> centroids;      // cluster id -> mean embedding

    std::size_t size() const { return clusters.size(); }
};

// Bottom-up merging on cosine distance d = 1 - cos(u, v); stops once the
// closest pair of clusters is farther apart than `delta`. Inter-cluster
// distances follow Lance-Williams updates for the chosen linkage. Ties are
// broken by the lowest member index, so the result is order-deterministic.
// Memory is O(n^2) doubles; fine up to a few tens of thousands of strings.
inline ClusterAssignment agglomerative_cluster(const std::vector<std::vector<double>>& embeddings,
                                               double delta,
                                               Linkage linkage = Linkage::average) {
    const std::size_t n = embeddings.size();
    if (n == 0) throw EmptyInputError("agglomerative_cluster: no embeddings");
    if (!(delta > 0.0 && delta < 2.0)) throw InvalidConfigError("delta must be in (0, 2)");

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n * n, kInf);
    auto d = [&](std::size_t i, std::size_t j) -> double& { return dist[i * n + j]; };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            d(i, j) = d(j, i) = 1.0 - cosine_similarity(embeddings[i], embeddings[j]);

    // A live cluster is identified by its smallest member index; merges fold
    // the larger id into the smaller one.
    std::vector<bool> active(n, true);
    std::vector<std::vector<std::size_t>> members(n);
    for (std::size_t i = 0; i < n; ++i) members[i] = {i};
    std::vector<std::size_t> nn(n);        // nearest active cluster
    std::vector<double> nn_dist(n, kInf);

    auto refresh_nn = [&](std::size_t i) {
        nn_dist[i] = kInf;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || !active[j]) continue;
            if (d(i, j) < nn_dist[i]) {
                nn_dist[i] = d(i, j);
                nn[i] = j;
            }
        }
    };
    for (std::size_t i = 0; i < n; ++i) refresh_nn(i);

    std::size_t remaining = n;
    while (remaining > 1) {
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            if (best == n || nn_dist[i] < nn_dist[best]) best = i;
        }
        if (nn_dist[best] > delta) break;
        std::size_t a = std::min(best, nn[best]);
        std::size_t b = std::max(best, nn[best]);

        const double sa = static_cast<double>(members[a].size());
        const double sb = static_cast<double>(members[b].size());
        for (std::size_t j = 0; j < n; ++j) {
            if (!active[j] || j == a || j == b) continue;
            double dj = (linkage == Linkage::average)
                            ? (sa * d(a, j) + sb * d(b, j)) / (sa + sb)
                            : std::max(d(a, j), d(b, j));
            d(a, j) = d(j, a) = dj;
        }
        members[a].insert(members[a].end(), members[b].begin(), members[b].end());
        members[b].clear();
        active[b] = false;
        --remaining;

        refresh_nn(a);
        for (std::size_t j = 0; j < n; ++j) {
            if (!active[j] || j == a) continue;
            if (nn[j] == a || nn[j] == b) refresh_nn(j);
            else if (d(a, j) < nn_dist[j]) {
                nn_dist[j] = d(a, j);
                nn[j] = a;
            }
        }
    }

    ClusterAssignment out;
    out.member_to_cluster.assign(n, 0);
    const std::size_t w = embeddings[0].size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!active[i]) continue;
        std::size_t cid = out.clusters.size();
        std::sort(members[i].begin(), members[i].end());
        std::vector<double> centroid(w, 0.0);
        for (std::size_t m : members[i]) {
            out.member_to_cluster[m] = cid;
            for (std::size_t k = 0; k < w; ++k) centroid[k] += embeddings[m][k];
        }
        for (auto& x : centroid) x /= static_cast<double>(members[i].size());
        out.clusters.push_back(std::move(members[i]));
        out.centroids.push_back(std::move(centroid));
    }
    return out;
}

}  // namespace mg
