#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "medgraph/global_graph.hpp"
#include "medgraph/patient.hpp"
#include "medgraph/store.hpp"
#include "medgraph/synth.hpp"

namespace test_util {

// Tiny fixed global graph: 4 nodes, 2 relation types, codes c1 and c2.
// c1 anchors at node 0 with edge 0-(0)-1; c2 anchors at node 2 with 2-(1)-3.
inline mg::GlobalGraph toy_graph(std::size_t dim = 4) {
    mg::GlobalGraph g;
    g.dim = dim;
    for (std::size_t m = 0; m < 4; ++m) {
        std::vector<double> e(dim, 0.0);
        e[m % dim] = 1.0;
        e[(m + 1) % dim] = 0.5 * static_cast<double>(m + 1);
        g.node_emb.push_back(std::move(e));
        g.node_labels.push_back("node " + std::to_string(m));
    }
    for (std::size_t t = 0; t < 2; ++t) {
        std::vector<double> e(dim, 0.1 * static_cast<double>(t + 1));
        g.edge_emb.push_back(std::move(e));
        g.edge_labels.push_back("rel " + std::to_string(t));
    }
    g.edges = {{0, 0, 1}, {2, 1, 3}};
    g.code_subgraphs["condition:c1"] = {{0, 1}, {0}, 0};
    g.code_subgraphs["condition:c2"] = {{2, 3}, {1}, 2};
    return g;
}

inline mg::Patient toy_patient(std::size_t visits) {
    mg::Patient p;
    p.id = "toy";
    for (std::size_t v = 0; v < visits; ++v) {
        mg::Visit visit;
        visit.admit_time = 10.0 * static_cast<double>(v);
        visit.discharge_time = visit.admit_time + 2.0;
        visit.los_days = 2.0;
        visit.codes.push_back({v % 2 == 0 ? "c1" : "c2", mg::CodeCategory::condition});
        p.visits.push_back(std::move(visit));
    }
    return p;
}

struct SynthDataset {
    mg::SynthCohort cohort;
    mg::GlobalGraph graph;
    mg::EmbeddingProvider provider;
};

// In-memory run of the data stages: cohort -> per-code concept KGs ->
// clustered global graph, with fallback embeddings for every string.
inline SynthDataset build_synthetic_dataset(const mg::SynthConfig& cfg, std::size_t kappa = 2,
                                            std::size_t epsilon = 5, double delta = 0.15) {
    SynthDataset ds{mg::generate_cohort(cfg), {}, mg::EmbeddingProvider(cfg.embedding_dim, cfg.seed)};
    for (const auto& s : ds.cohort.all_strings) {
        std::string key = mg::normalize_term(s);
        ds.provider.put(key, ds.provider.fallback(key));
    }
    mg::TripleStore store(ds.cohort.store_triples);
    std::vector<mg::ConceptKg> kgs;
    for (const auto& code : ds.cohort.code_vocab)
        kgs.push_back(mg::sample_subgraph(code, store, kappa, epsilon,
                                          mg::hash_string(mg::code_key(code), cfg.seed)));
    ds.graph = mg::cluster_and_build(kgs, ds.provider, delta);
    return ds;
}

// Unique scratch path under the system temp dir; caller cleans up.
inline std::string tmp_path(const std::string& name) {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("medgraph_test_" + std::to_string(++counter) + "_" + name);
    return dir.string();
}

}  // namespace test_util
