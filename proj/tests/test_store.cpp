#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include <catch2/catch_amalgamated.hpp>

#include "medgraph/store.hpp"

using namespace mg;

namespace {

// Independent BFS distances over undirected incidence.
std::map<std::string, std::size_t> bfs_distances(const std::vector<Triple>& triples,
                                                 const std::string& seed) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& t : triples) {
        adj[t.head].push_back(t.tail);
        adj[t.tail].push_back(t.head);
    }
    std::map<std::string, std::size_t> dist;
    dist[seed] = 0;
    std::queue<std::string> q;
    q.push(seed);
    while (!q.empty()) {
        std::string cur = q.front();
        q.pop();
        for (const auto& nb : adj[cur]) {
            if (dist.count(nb)) continue;
            dist[nb] = dist[cur] + 1;
            q.push(nb);
        }
    }
    return dist;
}

std::vector<Triple> random_store(Rng& rng, std::size_t max_triples) {
    std::size_t n = 1 + rng.next_below(max_triples);
    std::vector<Triple> ts;
    std::size_t ents = 4 + rng.next_below(30);
    for (std::size_t i = 0; i < n; ++i) {
        ts.push_back({"e" + std::to_string(rng.next_below(ents)),
                      "r" + std::to_string(rng.next_below(5)),
                      "e" + std::to_string(rng.next_below(ents))});
    }
    // guarantee the seed entity exists
    ts.push_back({"e0", "r0", "e1"});
    return ts;
}

}  // namespace

TEST_CASE("hop 1 retrieves every incident triple regardless of epsilon") {
    std::vector<Triple> ts{{"a", "r1", "b"}, {"c", "r2", "a"}, {"a", "r3", "a"}};
    TripleStore store(ts);
    for (std::size_t eps : {1, 2, 9}) {
        auto kg = sample_subgraph({"a", CodeCategory::condition}, store, 1, eps, 3);
        CHECK(kg.triples.size() == 3);
    }
}

TEST_CASE("chain a-b-c-d with kappa=2 keeps d out") {
    std::vector<Triple> ts{{"a", "r", "b"}, {"b", "r", "c"}, {"c", "r", "d"}};
    TripleStore store(ts);
    auto kg = sample_subgraph({"a", CodeCategory::condition}, store, 2, 5, 0);
    REQUIRE(kg.triples.size() == 2);
    CHECK(kg.triples[0] == Triple{"a", "r", "b"});
    CHECK(kg.triples[1] == Triple{"b", "r", "c"});
}

TEST_CASE("unknown entity raises") {
    TripleStore store({{"a", "r", "b"}});
    CHECK_THROWS_AS(sample_subgraph({"zzz", CodeCategory::drug}, store, 2, 5, 0),
                    UnknownEntityError);
}

TEST_CASE("invalid kappa or epsilon raises") {
    TripleStore store({{"a", "r", "b"}});
    MedicalCode code{"a", CodeCategory::condition};
    CHECK_THROWS_AS(sample_subgraph(code, store, 0, 5, 0), InvalidConfigError);
    CHECK_THROWS_AS(sample_subgraph(code, store, 2, 0, 0), InvalidConfigError);
}

TEST_CASE("BFS oracle: sampled entities stay within kappa hops, 100 random stores") {
    Rng rng(42);
    for (int iter = 0; iter < 100; ++iter) {
        auto ts = random_store(rng, 200);
        TripleStore store(ts);
        std::size_t kappa = 1 + rng.next_below(3);
        std::size_t eps = 1 + rng.next_below(4);
        auto kg = sample_subgraph({"e0", CodeCategory::condition}, store, kappa, eps,
                                  rng.next_u64());
        auto dist = bfs_distances(ts, "e0");
        for (const auto& t : kg.triples) {
            // every endpoint of a sampled triple was reached within kappa hops
            REQUIRE(dist.count(t.head));
            REQUIRE(dist.count(t.tail));
            CHECK(std::min(dist[t.head], dist[t.tail]) < kappa);
            CHECK(std::max(dist[t.head], dist[t.tail]) <= kappa);
        }
    }
}

TEST_CASE("hop-1 completeness on random stores") {
    Rng rng(7);
    for (int iter = 0; iter < 50; ++iter) {
        auto ts = random_store(rng, 120);
        TripleStore store(ts);
        auto kg = sample_subgraph({"e0", CodeCategory::condition}, store, 2, 2, rng.next_u64());
        for (const auto& t : ts)
            if (t.head == "e0" || t.tail == "e0") {
                CHECK(std::binary_search(kg.triples.begin(), kg.triples.end(), t));
            }
    }
}

TEST_CASE("same seed gives a bit-identical subgraph") {
    Rng rng(11);
    auto ts = random_store(rng, 150);
    TripleStore store(ts);
    MedicalCode code{"e0", CodeCategory::condition};
    auto a = sample_subgraph(code, store, 3, 2, 1234);
    auto b = sample_subgraph(code, store, 3, 2, 1234);
    CHECK(a.triples == b.triples);
    auto c = sample_subgraph(code, store, 3, 2, 1235);
    // different seeds usually differ; only check no crash + validity
    CHECK(c.triples.size() >= 1);
}

TEST_CASE("triple budget bound") {
    Rng rng(5);
    for (int iter = 0; iter < 20; ++iter) {
        auto ts = random_store(rng, 200);
        TripleStore store(ts);
        std::size_t eps = 1 + rng.next_below(3);
        auto kg = sample_subgraph({"e0", CodeCategory::condition}, store, 2, eps, rng.next_u64());
        // count unique incident triples of the seed
        std::set<Triple> inc;
        std::set<std::string> frontier;
        for (const auto& t : ts)
            if (t.head == "e0" || t.tail == "e0") {
                inc.insert(t);
                frontier.insert(t.head);
                frontier.insert(t.tail);
            }
        frontier.erase("e0");
        CHECK(kg.triples.size() <= inc.size() + eps * frontier.size());
    }
}
