#include <catch2/catch_amalgamated.hpp>

#include "medgraph/patient.hpp"

#include "test_util.hpp"

using namespace mg;

TEST_CASE("single visit, single code composition") {
    GlobalGraph g = test_util::toy_graph();
    Patient p = test_util::toy_patient(1);  // code c1 -> nodes {0,1}, anchor 0
    PatientGraph pg = compose_patient_graph(p, g, 1);

    CHECK(pg.patient_node == 4);
    CHECK(pg.reserved_edge_type == 2);
    REQUIRE(pg.visit_count == 1);
    CHECK(pg.visit_nodes[0] == std::vector<std::size_t>{0, 1, 4});
    CHECK(pg.direct_nodes == std::vector<std::size_t>{0});
    REQUIRE(pg.visit_edges[0].size() == 2);
    CHECK(pg.visit_edges[0][0] == GlobalGraph::Edge{0, 0, 1});
    CHECK(pg.visit_edges[0][1] == GlobalGraph::Edge{4, 2, 0});
    // multi-hot row marks exactly the global nodes of the visit
    CHECK(pg.multi_hot[0] == std::vector<std::uint8_t>{1, 1, 0, 0});
}

TEST_CASE("shared code appears in both visit rows") {
    GlobalGraph g = test_util::toy_graph();
    Patient p;
    p.id = "x";
    for (int v = 0; v < 2; ++v) {
        Visit visit;
        visit.admit_time = 10.0 * v;
        visit.discharge_time = visit.admit_time + 1;
        visit.codes.push_back({"c1", CodeCategory::condition});
        p.visits.push_back(visit);
    }
    PatientGraph pg = compose_patient_graph(p, g, 2);
    CHECK(pg.multi_hot[0] == pg.multi_hot[1]);
    CHECK(pg.visit_nodes[0] == pg.visit_nodes[1]);
}

TEST_CASE("reconstruction: multi-hot matches visit node sets") {
    GlobalGraph g = test_util::toy_graph();
    Patient p = test_util::toy_patient(3);
    PatientGraph pg = compose_patient_graph(p, g, 5);
    for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t m = 0; m < g.node_count(); ++m) {
            bool in_set = j < pg.visit_count &&
                          std::binary_search(pg.visit_nodes[j].begin(), pg.visit_nodes[j].end(), m);
            CHECK((pg.multi_hot[j][m] == 1) == in_set);
        }
}

TEST_CASE("adding a code never removes nodes (monotone union)") {
    GlobalGraph g = test_util::toy_graph();
    Patient p = test_util::toy_patient(2);
    PatientGraph before = compose_patient_graph(p, g, 2);
    p.visits[0].codes.push_back({"c2", CodeCategory::condition});
    PatientGraph after = compose_patient_graph(p, g, 2);
    for (std::size_t j = 0; j < before.visit_count; ++j)
        for (std::size_t m : before.visit_nodes[j])
            CHECK(std::binary_search(after.visit_nodes[j].begin(), after.visit_nodes[j].end(), m));
}

TEST_CASE("patient node degree equals direct-set size and spans visits") {
    GlobalGraph g = test_util::toy_graph();
    Patient p = test_util::toy_patient(3);  // codes c1, c2, c1 -> anchors {0, 2}
    PatientGraph pg = compose_patient_graph(p, g, 3);
    CHECK(pg.direct_nodes == std::vector<std::size_t>{0, 2});
    std::set<std::size_t> partners;
    for (const auto& evec : pg.visit_edges)
        for (const auto& e : evec)
            if (e.a == pg.patient_node || e.b == pg.patient_node)
                partners.insert(e.a == pg.patient_node ? e.b : e.a);
    CHECK(partners.size() == pg.direct_nodes.size());
    for (const auto& nodes : pg.visit_nodes)
        CHECK(std::binary_search(nodes.begin(), nodes.end(), pg.patient_node));
}

TEST_CASE("visit overflow keeps the most recent visits") {
    GlobalGraph g = test_util::toy_graph();
    Patient p = test_util::toy_patient(4);  // c1 c2 c1 c2
    PatientGraph pg = compose_patient_graph(p, g, 2);
    REQUIRE(pg.visit_count == 2);
    // last two visits are c1 then c2
    CHECK(pg.multi_hot[0] == std::vector<std::uint8_t>{1, 1, 0, 0});
    CHECK(pg.multi_hot[1] == std::vector<std::uint8_t>{0, 0, 1, 1});
}

TEST_CASE("unknown code raises") {
    GlobalGraph g = test_util::toy_graph();
    Patient p = test_util::toy_patient(1);
    p.visits[0].codes.push_back({"nope", CodeCategory::drug});
    CHECK_THROWS_AS(compose_patient_graph(p, g, 1), UnknownCodeError);
}

TEST_CASE("patient init embedding is the direct-set mean") {
    GlobalGraph g = test_util::toy_graph();
    Patient one = test_util::toy_patient(1);
    PatientGraph pg1 = compose_patient_graph(one, g, 1);
    CHECK(patient_node_init_embedding(pg1, g) == g.node_emb[0]);

    Patient two = test_util::toy_patient(2);  // anchors 0 and 2
    PatientGraph pg2 = compose_patient_graph(two, g, 2);
    auto mean = patient_node_init_embedding(pg2, g);
    for (std::size_t k = 0; k < g.dim; ++k)
        CHECK(mean[k] == Catch::Approx(0.5 * (g.node_emb[0][k] + g.node_emb[2][k])).margin(1e-12));

    PatientGraph empty;
    CHECK_THROWS_AS(patient_node_init_embedding(empty, g), EmptyInputError);
}

TEST_CASE("EHR jsonl round trip and validation") {
    Patient p = test_util::toy_patient(2);
    p.visits[0].codes.push_back({"d9", CodeCategory::drug});
    p.visits[1].codes.push_back({"p3", CodeCategory::procedure});
    p.visits[1].mortality = 1;
    std::string path = test_util::tmp_path("ehr.jsonl");
    save_ehr_jsonl(path, {p});
    auto loaded = load_ehr_jsonl(path);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].id == p.id);
    REQUIRE(loaded[0].visits.size() == 2);
    CHECK(loaded[0].visits[1].mortality == 1);
    // code multisets survive (order within a visit is category-grouped)
    auto sorted_codes = [](Visit v) { std::sort(v.codes.begin(), v.codes.end()); return v.codes; };
    CHECK(sorted_codes(loaded[0].visits[0]) == sorted_codes(p.visits[0]));
    std::filesystem::remove(path);

    nlohmann::json bad = patient_to_json(p);
    bad["visits"][0]["t_discharge"] = -5.0;
    CHECK_THROWS_AS(patient_from_json(bad), InvalidConfigError);
    nlohmann::json out_of_order = patient_to_json(p);
    out_of_order["visits"][1]["t_admit"] = -1.0;
    CHECK_THROWS_AS(patient_from_json(out_of_order), InvalidConfigError);
}

TEST_CASE("patient graph container round trip") {
    GlobalGraph g = test_util::toy_graph();
    std::vector<PatientGraph> graphs;
    graphs.push_back(compose_patient_graph(test_util::toy_patient(1), g, 3));
    graphs.push_back(compose_patient_graph(test_util::toy_patient(3), g, 3));
    std::string path = test_util::tmp_path("patients.bin");
    save_patient_graphs(path, graphs);
    auto loaded = load_patient_graphs(path);
    REQUIRE(loaded.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(loaded[i].visit_nodes == graphs[i].visit_nodes);
        CHECK(loaded[i].visit_edges == graphs[i].visit_edges);
        CHECK(loaded[i].direct_nodes == graphs[i].direct_nodes);
        CHECK(loaded[i].multi_hot == graphs[i].multi_hot);
        CHECK(loaded[i].patient_id == graphs[i].patient_id);
    }
    std::filesystem::remove(path);
}
