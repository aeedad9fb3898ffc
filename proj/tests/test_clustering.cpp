#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "medgraph/clustering.hpp"

using namespace mg;

namespace {

// Three well-separated unit directions with small in-cluster jitter:
// intra-cosine >= 0.99, inter-cosine <= 0.5.
std::vector<std::vector<double>> planted_three_clusters(Rng& rng, std::size_t per_cluster,
                                                        std::vector<std::size_t>& truth) {
    const std::size_t dim = 8;
    std::vector<std::vector<double>> centers(3, std::vector<double>(dim, 0.0));
    centers[0][0] = 1.0;
    centers[1][2] = 1.0;
    centers[2][4] = 1.0;
    std::vector<std::vector<double>> out;
    truth.clear();
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < per_cluster; ++i) {
            std::vector<double> v = centers[c];
            for (auto& x : v) x += 0.01 * rng.next_gaussian();
            double n = std::sqrt(dot(v, v));
            for (auto& x : v) x /= n;
            out.push_back(std::move(v));
            truth.push_back(c);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("duplicate embeddings merge, orthogonal stays out") {
    std::vector<std::vector<double>> e{{1, 0}, {1, 0}, {0, 1}};
    auto a = agglomerative_cluster(e, 0.15);
    REQUIRE(a.size() == 2);
    CHECK(a.clusters[0] == std::vector<std::size_t>{0, 1});
    CHECK(a.clusters[1] == std::vector<std::size_t>{2});
    CHECK(a.member_to_cluster == std::vector<std::size_t>{0, 0, 1});
}

TEST_CASE("single embedding yields one singleton") {
    auto a = agglomerative_cluster({{3.0, 4.0}}, 0.15);
    REQUIRE(a.size() == 1);
    CHECK(a.clusters[0] == std::vector<std::size_t>{0});
    CHECK(a.centroids[0] == std::vector<double>{3.0, 4.0});
}

TEST_CASE("empty input and bad delta raise") {
    CHECK_THROWS_AS(agglomerative_cluster({}, 0.15), EmptyInputError);
    CHECK_THROWS_AS(agglomerative_cluster({{1.0, 0.0}}, 0.0), InvalidConfigError);
    CHECK_THROWS_AS(agglomerative_cluster({{1.0, 0.0}}, 2.5), InvalidConfigError);
}

TEST_CASE("planted 3-cluster recovery at delta 0.15, 20 instantiations") {
    Rng rng(123);
    for (int iter = 0; iter < 20; ++iter) {
        std::vector<std::size_t> truth;
        auto e = planted_three_clusters(rng, 4 + rng.next_below(5), truth);
        // sanity on the construction itself
        for (std::size_t i = 0; i < e.size(); ++i)
            for (std::size_t j = i + 1; j < e.size(); ++j) {
                double cs = cosine_similarity(e[i], e[j]);
                if (truth[i] == truth[j]) REQUIRE(cs >= 0.99);
                else REQUIRE(cs <= 0.5);
            }
        auto a = agglomerative_cluster(e, 0.15);
        REQUIRE(a.size() == 3);
        for (std::size_t i = 0; i < e.size(); ++i)
            for (std::size_t j = 0; j < e.size(); ++j)
                CHECK((a.member_to_cluster[i] == a.member_to_cluster[j]) ==
                      (truth[i] == truth[j]));
    }
}

TEST_CASE("cluster count is monotone non-increasing in delta") {
    Rng rng(77);
    std::vector<std::vector<double>> e;
    for (int i = 0; i < 60; ++i) {
        std::vector<double> v(6);
        for (auto& x : v) x = rng.next_gaussian();
        e.push_back(std::move(v));
    }
    std::size_t prev = e.size() + 1;
    for (double delta : {0.05, 0.1, 0.15, 0.2, 0.5, 1.0}) {
        auto a = agglomerative_cluster(e, delta);
        CHECK(a.size() <= prev);
        prev = a.size();
    }
}

TEST_CASE("partition and centroid properties") {
    Rng rng(5);
    std::vector<std::vector<double>> e;
    for (int i = 0; i < 40; ++i) {
        std::vector<double> v(5);
        for (auto& x : v) x = rng.next_gaussian();
        e.push_back(std::move(v));
    }
    auto a = agglomerative_cluster(e, 0.3);
    // partition: every member in exactly one cluster
    std::vector<int> seen(e.size(), 0);
    for (std::size_t c = 0; c < a.size(); ++c)
        for (std::size_t m : a.clusters[c]) {
            CHECK(a.member_to_cluster[m] == c);
            ++seen[m];
        }
    for (int s : seen) CHECK(s == 1);
    // centroid: arithmetic mean of members
    for (std::size_t c = 0; c < a.size(); ++c) {
        std::vector<double> mean(5, 0.0);
        for (std::size_t m : a.clusters[c])
            for (std::size_t k = 0; k < 5; ++k) mean[k] += e[m][k];
        for (auto& x : mean) x /= static_cast<double>(a.clusters[c].size());
        for (std::size_t k = 0; k < 5; ++k)
            CHECK(a.centroids[c][k] == Catch::Approx(mean[k]).margin(1e-12));
    }
}

TEST_CASE("identical embeddings co-cluster for any delta") {
    std::vector<std::vector<double>> e{{0.3, -0.7}, {1, 1}, {0.3, -0.7}};
    for (double delta : {0.01, 0.15, 1.9}) {
        auto a = agglomerative_cluster(e, delta);
        CHECK(a.member_to_cluster[0] == a.member_to_cluster[2]);
    }
}

TEST_CASE("deterministic across repeated runs") {
    Rng rng(9);
    std::vector<std::vector<double>> e;
    for (int i = 0; i < 30; ++i) {
        std::vector<double> v(4);
        for (auto& x : v) x = rng.next_gaussian();
        e.push_back(std::move(v));
    }
    auto a = agglomerative_cluster(e, 0.25);
    auto b = agglomerative_cluster(e, 0.25);
    CHECK(a.member_to_cluster == b.member_to_cluster);
    CHECK(a.clusters == b.clusters);
}

TEST_CASE("complete linkage merges no farther than average linkage") {
    Rng rng(31);
    std::vector<std::vector<double>> e;
    for (int i = 0; i < 25; ++i) {
        std::vector<double> v(4);
        for (auto& x : v) x = rng.next_gaussian();
        e.push_back(std::move(v));
    }
    auto avg = agglomerative_cluster(e, 0.4, Linkage::average);
    auto cpl = agglomerative_cluster(e, 0.4, Linkage::complete);
    CHECK(cpl.size() >= avg.size());
}
