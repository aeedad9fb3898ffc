#include <catch2/catch_amalgamated.hpp>

#include "medgraph/global_graph.hpp"

#include "test_util.hpp"

using namespace mg;

TEST_CASE("global graph json+bin round trip is exact") {
    GlobalGraph g = test_util::toy_graph();
    std::string path = test_util::tmp_path("graph.json");
    save_global_graph(g, path);
    GlobalGraph h = load_global_graph(path);
    CHECK(h.dim == g.dim);
    CHECK(h.node_labels == g.node_labels);
    CHECK(h.edge_labels == g.edge_labels);
    CHECK(h.node_emb == g.node_emb);  // bitwise: raw f64 blocks
    CHECK(h.edge_emb == g.edge_emb);
    CHECK(h.edges == g.edges);
    REQUIRE(h.code_subgraphs.size() == g.code_subgraphs.size());
    for (const auto& [k, sub] : g.code_subgraphs) {
        REQUIRE(h.code_subgraphs.count(k) == 1);
        CHECK(h.code_subgraphs[k].nodes == sub.nodes);
        CHECK(h.code_subgraphs[k].edges == sub.edges);
        CHECK(h.code_subgraphs[k].anchor == sub.anchor);
    }
    std::filesystem::remove(path);
    std::filesystem::remove(sibling_bin_path(path));
}

TEST_CASE("cluster_and_build merges synonymous strings") {
    EmbeddingProvider provider(3, 0);
    provider.put("flu", {1.0, 0.0, 0.0});
    provider.put("influenza", {1.0, 0.0, 0.0});  // same direction -> same cluster
    provider.put("fever", {0.0, 1.0, 0.0});
    provider.put("causes", {0.0, 0.0, 1.0});

    ConceptKg a;
    a.code = {"flu", CodeCategory::condition};
    a.add({"flu", "causes", "fever"});
    ConceptKg b;
    b.code = {"influenza", CodeCategory::condition};
    b.add({"influenza", "causes", "fever"});

    GlobalGraph g = cluster_and_build({a, b}, provider, 0.15);
    CHECK(g.node_count() == 2);  // {flu, influenza} merged, fever separate
    CHECK(g.edge_type_count() == 1);
    REQUIRE(g.edges.size() == 1);  // both triples collapse to one edge
    const auto& sa = g.code_subgraphs.at("condition:flu");
    const auto& sb = g.code_subgraphs.at("condition:influenza");
    CHECK(sa.anchor == sb.anchor);
    CHECK(sa.nodes == sb.nodes);
    CHECK(sa.edges == sb.edges);
}

TEST_CASE("anchor resolves even for codes without triples") {
    EmbeddingProvider provider(2, 0);
    provider.put("rare thing", {1.0, 0.0});
    ConceptKg kg;
    kg.code = {"rare thing", CodeCategory::procedure};
    GlobalGraph g = cluster_and_build({kg}, provider, 0.15);
    CHECK(g.node_count() == 1);
    CHECK(g.edge_type_count() == 0);
    CHECK(g.code_subgraphs.at("procedure:rare thing").anchor == 0);
    CHECK(g.code_subgraphs.at("procedure:rare thing").nodes == std::vector<std::size_t>{0});
}

TEST_CASE("code key formatting") {
    CHECK(code_key({"x y", CodeCategory::drug}) == "drug:x y");
}
