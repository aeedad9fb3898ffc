#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "medgraph/model.hpp"

namespace mg {

struct NodeScore {
    std::size_t node = 0;  // global id; == M for the patient node
    double score = 0.0;
};

struct EdgeScore {
    GlobalGraph::Edge edge;
    double score = 0.0;
};

struct ImportanceReport {
    std::vector<NodeScore> entities;   // sorted by node id
    std::vector<EdgeScore> relations;  // sorted by (a, type, b)
};

// Entity scores sum the attention product over visits and layers 1..L-1;
// relation scores sum the per-layer edge weight over the same range. With
// attention shared across layers the entity sum is (L-1) times the per-visit
// sum, which keeps scores comparable across L.
inline ImportanceReport importance_scores(const BatModel& model, const PatientGraph& pg,
                                          const ForwardResult& fr) {
    if (fr.alpha.size() == 0) throw Error("importance_scores: run forward first");
    const std::size_t L = model.params().L;
    const std::size_t M = model.params().M;
    ImportanceReport rep;

    std::set<std::size_t> nodes;
    for (const auto& vn : pg.visit_nodes) nodes.insert(vn.begin(), vn.end());
    double layer_factor = L >= 1 ? static_cast<double>(L - 1) : 0.0;
    for (std::size_t k : nodes) {
        double s = 0.0;
        std::size_t col = std::min(k, M);
        for (std::size_t j = 0; j < pg.visit_count; ++j)
            s += fr.alpha.at(j, col) * fr.beta.at(j, 0);
        rep.entities.push_back({k, layer_factor * s});
    }

    std::set<GlobalGraph::Edge> edges;
    for (const auto& ve : pg.visit_edges) edges.insert(ve.begin(), ve.end());
    for (const auto& e : edges) {
        double s = 0.0;
        for (std::size_t l = 0; l + 1 < L; ++l) {
            if (model.config().use_edge_weights) s += model.params().wR[l].at(e.type, 0);
            else s += 1.0;
        }
        rep.relations.push_back({e, s});
    }
    return rep;
}

// K largest scores; ties go to the lower id. Works on any (id, score) list.
inline std::vector<std::size_t> top_k_indices(const std::vector<double>& scores, std::size_t K) {
    std::vector<std::size_t> idx(scores.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    idx.resize(std::min(K, idx.size()));
    return idx;
}

struct TopK {
    std::vector<NodeScore> nodes;
    std::vector<EdgeScore> edges;
};

inline TopK top_k(const ImportanceReport& rep, std::size_t K) {
    if (K < 1) throw InvalidConfigError("top_k: K must be >= 1");
    TopK out;
    std::vector<double> ns;
    for (const auto& e : rep.entities) ns.push_back(e.score);
    for (std::size_t i : top_k_indices(ns, K)) out.nodes.push_back(rep.entities[i]);
    std::vector<double> es;
    for (const auto& e : rep.relations) es.push_back(e.score);
    for (std::size_t i : top_k_indices(es, K)) out.edges.push_back(rep.relations[i]);
    return out;
}

// --- annotated graph export ---

namespace detail {

inline std::map<std::size_t, double> normalized_node_scores(const ImportanceReport& rep) {
    std::map<std::size_t, double> out;
    if (rep.entities.empty()) return out;
    double lo = rep.entities[0].score, hi = rep.entities[0].score;
    for (const auto& e : rep.entities) {
        lo = std::min(lo, e.score);
        hi = std::max(hi, e.score);
    }
    for (const auto& e : rep.entities)
        out[e.node] = (hi - lo < 1e-15) ? 1.0 : (e.score - lo) / (hi - lo);
    return out;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

}  // namespace detail

enum class ExportFormat { dot, graphml };

inline ExportFormat export_format_from_string(std::string_view s) {
    if (s == "dot") return ExportFormat::dot;
    if (s == "graphml") return ExportFormat::graphml;
    throw InvalidConfigError("unknown export format: " + std::string(s));
}

inline std::string node_display_label(const GlobalGraph& g, const PatientGraph& pg, std::size_t node) {
    if (node == pg.patient_node) return "patient " + pg.patient_id;
    return g.node_labels[node];
}

inline void export_graph_dot(std::ostream& os, const GlobalGraph& g, const PatientGraph& pg,
                             const ImportanceReport& rep) {
    auto norm = detail::normalized_node_scores(rep);
    os << "graph patient_kg {\n";
    for (const auto& e : rep.entities) {
        double v = norm[e.node];
        int shade = static_cast<int>(255.0 * (1.0 - 0.8 * v));
        char color[16];
        std::snprintf(color, sizeof(color), "#%02x%02x%02x", shade, shade, shade);
        os << "  n" << e.node << " [label=\"" << detail::dot_escape(node_display_label(g, pg, e.node))
           << "\", score=\"" << e.score << "\", width=\"" << 0.5 + v << "\", style=filled, fillcolor=\""
           << color << "\"";
        if (e.node == pg.patient_node) os << ", patient=\"true\", shape=doublecircle";
        else if (pg.is_direct(e.node)) os << ", direct_ehr=\"true\", shape=box";
        os << "];\n";
    }
    for (const auto& e : rep.relations) {
        std::string label = e.edge.type < g.edge_type_count() ? g.edge_labels[e.edge.type] : "has code";
        os << "  n" << e.edge.a << " -- n" << e.edge.b << " [label=\"" << detail::dot_escape(label)
           << "\", score=\"" << e.score << "\"];\n";
    }
    os << "}\n";
}

inline void export_graph_graphml(std::ostream& os, const GlobalGraph& g, const PatientGraph& pg,
                                 const ImportanceReport& rep) {
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
       << "  <key id=\"d0\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n"
       << "  <key id=\"d1\" for=\"node\" attr.name=\"score\" attr.type=\"double\"/>\n"
       << "  <key id=\"d2\" for=\"node\" attr.name=\"direct_ehr\" attr.type=\"boolean\"/>\n"
       << "  <key id=\"d3\" for=\"node\" attr.name=\"patient\" attr.type=\"boolean\"/>\n"
       << "  <key id=\"d4\" for=\"node\" attr.name=\"size\" attr.type=\"double\"/>\n"
       << "  <key id=\"e0\" for=\"edge\" attr.name=\"label\" attr.type=\"string\"/>\n"
       << "  <key id=\"e1\" for=\"edge\" attr.name=\"score\" attr.type=\"double\"/>\n"
       << "  <graph id=\"patient_kg\" edgedefault=\"undirected\">\n";
    auto norm = detail::normalized_node_scores(rep);
    for (const auto& e : rep.entities) {
        os << "    <node id=\"n" << e.node << "\">\n"
           << "      <data key=\"d0\">" << detail::xml_escape(node_display_label(g, pg, e.node))
           << "</data>\n"
           << "      <data key=\"d1\">" << e.score << "</data>\n"
           << "      <data key=\"d2\">" << (pg.is_direct(e.node) ? "true" : "false") << "</data>\n"
           << "      <data key=\"d3\">" << (e.node == pg.patient_node ? "true" : "false") << "</data>\n"
           << "      <data key=\"d4\">" << 0.5 + norm[e.node] << "</data>\n"
           << "    </node>\n";
    }
    std::size_t eid = 0;
    for (const auto& e : rep.relations) {
        std::string label = e.edge.type < g.edge_type_count() ? g.edge_labels[e.edge.type] : "has code";
        os << "    <edge id=\"e" << eid++ << "\" source=\"n" << e.edge.a << "\" target=\"n" << e.edge.b
           << "\">\n"
           << "      <data key=\"e0\">" << detail::xml_escape(label) << "</data>\n"
           << "      <data key=\"e1\">" << e.score << "</data>\n"
           << "    </edge>\n";
    }
    os << "  </graph>\n</graphml>\n";
}

inline void export_graph(const std::string& path, ExportFormat fmt, const GlobalGraph& g,
                         const PatientGraph& pg, const ImportanceReport& rep) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    if (fmt == ExportFormat::dot) export_graph_dot(f, g, pg, rep);
    else export_graph_graphml(f, g, pg, rep);
}

}  // namespace mg
