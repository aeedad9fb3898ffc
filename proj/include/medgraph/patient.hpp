#pragma once

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "medgraph/global_graph.hpp"

namespace mg {

struct Visit {
    double admit_time = 0;      // days
    double discharge_time = 0;  // days
    std::vector<MedicalCode> codes;
    int mortality = 0;
    double los_days = 0;
};

struct Patient {
    std::string id;
    std::vector<Visit> visits;  // strictly increasing admit_time
};

// Per-visit materialization of one patient's personalized KG. The patient
// node gets the virtual index M (one past the global node range) and is a
// member of every visit's node set. Patient-to-anchor edges carry the
// reserved edge type |C_E|.
struct PatientGraph {
    std::size_t patient_node = 0;                       // == global node count M
    std::size_t reserved_edge_type = 0;                 // == |C_E|
    std::vector<std::vector<std::size_t>> visit_nodes;  // per visit, sorted, incl. patient node
    std::vector<std::vector<GlobalGraph::Edge>> visit_edges;
    std::vector<std::size_t> direct_nodes;              // Delta: anchors of the patient's own codes
    std::vector<std::vector<std::uint8_t>> multi_hot;   // N x M over global nodes
    std::size_t visit_count = 0;                        // J (non-padded rows)
    std::string patient_id;

    bool is_direct(std::size_t node) const {
        return std::binary_search(direct_nodes.begin(), direct_nodes.end(), node);
    }
};

inline PatientGraph compose_patient_graph(const Patient& patient, const GlobalGraph& g,
                                          std::size_t max_visits) {
    if (patient.visits.empty()) throw InvalidConfigError("patient has no visits: " + patient.id);
    PatientGraph pg;
    pg.patient_id = patient.id;
    pg.patient_node = g.node_count();
    pg.reserved_edge_type = g.edge_type_count();

    // Overflow keeps the most recent visits; the decay prior favors recency.
    std::size_t first = patient.visits.size() > max_visits ? patient.visits.size() - max_visits : 0;
    std::set<std::size_t> delta;
    for (std::size_t v = first; v < patient.visits.size(); ++v) {
        const Visit& visit = patient.visits[v];
        std::set<std::size_t> nodes{pg.patient_node};
        std::set<GlobalGraph::Edge> edges;
        for (const auto& code : visit.codes) {
            auto it = g.code_subgraphs.find(code_key(code));
            if (it == g.code_subgraphs.end())
                throw UnknownCodeError("code has no subgraph: " + code_key(code));
            const auto& sub = it->second;
            nodes.insert(sub.nodes.begin(), sub.nodes.end());
            for (std::size_t eid : sub.edges) edges.insert(g.edges[eid]);
            edges.insert({pg.patient_node, pg.reserved_edge_type, sub.anchor});
            delta.insert(sub.anchor);
        }
        pg.visit_nodes.emplace_back(nodes.begin(), nodes.end());
        pg.visit_edges.emplace_back(edges.begin(), edges.end());
    }
    pg.visit_count = pg.visit_nodes.size();
    pg.direct_nodes.assign(delta.begin(), delta.end());

    pg.multi_hot.assign(max_visits, std::vector<std::uint8_t>(g.node_count(), 0));
    for (std::size_t j = 0; j < pg.visit_count; ++j)
        for (std::size_t m : pg.visit_nodes[j])
            if (m < g.node_count()) pg.multi_hot[j][m] = 1;
    return pg;
}

inline std::vector<double> patient_node_init_embedding(const PatientGraph& pg, const GlobalGraph& g) {
    if (pg.direct_nodes.empty()) throw EmptyInputError("patient has empty direct-code set");
    std::vector<double> mean(g.dim, 0.0);
    for (std::size_t m : pg.direct_nodes)
        for (std::size_t k = 0; k < g.dim; ++k) mean[k] += g.node_emb[m][k];
    for (auto& x : mean) x /= static_cast<double>(pg.direct_nodes.size());
    return mean;
}

// --- composed-graph io: one msgpack document holding every patient ---

inline nlohmann::json patient_graph_to_json(const PatientGraph& pg) {
    nlohmann::json j;
    j["patient_node"] = pg.patient_node;
    j["reserved_edge_type"] = pg.reserved_edge_type;
    j["visit_nodes"] = pg.visit_nodes;
    auto& ve = j["visit_edges"] = nlohmann::json::array();
    for (const auto& evec : pg.visit_edges) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& e : evec) row.push_back({e.a, e.type, e.b});
        ve.push_back(std::move(row));
    }
    j["direct_nodes"] = pg.direct_nodes;
    j["multi_hot"] = pg.multi_hot;
    j["visit_count"] = pg.visit_count;
    j["patient_id"] = pg.patient_id;
    return j;
}

inline PatientGraph patient_graph_from_json(const nlohmann::json& j) {
    PatientGraph pg;
    pg.patient_node = j.at("patient_node").get<std::size_t>();
    pg.reserved_edge_type = j.at("reserved_edge_type").get<std::size_t>();
    pg.visit_nodes = j.at("visit_nodes").get<std::vector<std::vector<std::size_t>>>();
    for (const auto& row : j.at("visit_edges")) {
        std::vector<GlobalGraph::Edge> evec;
        for (const auto& e : row)
            evec.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(),
                            e.at(2).get<std::size_t>()});
        pg.visit_edges.push_back(std::move(evec));
    }
    pg.direct_nodes = j.at("direct_nodes").get<std::vector<std::size_t>>();
    pg.multi_hot = j.at("multi_hot").get<std::vector<std::vector<std::uint8_t>>>();
    pg.visit_count = j.at("visit_count").get<std::size_t>();
    pg.patient_id = j.at("patient_id").get<std::string>();
    return pg;
}

inline void save_patient_graphs(const std::string& path, const std::vector<PatientGraph>& graphs) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& pg : graphs) j.push_back(patient_graph_to_json(pg));
    std::vector<std::uint8_t> bytes = nlohmann::json::to_msgpack(j);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<PatientGraph> load_patient_graphs(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    nlohmann::json j = nlohmann::json::from_msgpack(bytes);
    std::vector<PatientGraph> out;
    for (const auto& pj : j) out.push_back(patient_graph_from_json(pj));
    return out;
}

// --- EHR file io: one JSON object per line ---

inline Patient patient_from_json(const nlohmann::json& j) {
    Patient p;
    p.id = j.at("id").get<std::string>();
    for (const auto& vj : j.at("visits")) {
        Visit v;
        v.admit_time = vj.at("t_admit").get<double>();
        v.discharge_time = vj.at("t_discharge").get<double>();
        v.mortality = vj.value("mortality", 0);
        v.los_days = vj.value("los_days", 0.0);
        for (const auto& c : vj.value("conditions", std::vector<std::string>{}))
            v.codes.push_back({c, CodeCategory::condition});
        for (const auto& c : vj.value("procedures", std::vector<std::string>{}))
            v.codes.push_back({c, CodeCategory::procedure});
        for (const auto& c : vj.value("drugs", std::vector<std::string>{}))
            v.codes.push_back({c, CodeCategory::drug});
        if (v.discharge_time < v.admit_time)
            throw InvalidConfigError("visit discharges before admission: " + p.id);
        if (v.codes.empty()) throw InvalidConfigError("visit without codes: " + p.id);
        p.visits.push_back(std::move(v));
    }
    for (std::size_t i = 1; i < p.visits.size(); ++i)
        if (!(p.visits[i - 1].admit_time < p.visits[i].admit_time))
            throw InvalidConfigError("visits out of order for patient: " + p.id);
    return p;
}

inline nlohmann::json patient_to_json(const Patient& p) {
    nlohmann::json j;
    j["id"] = p.id;
    auto& visits = j["visits"] = nlohmann::json::array();
    for (const auto& v : p.visits) {
        nlohmann::json vj;
        vj["t_admit"] = v.admit_time;
        vj["t_discharge"] = v.discharge_time;
        vj["mortality"] = v.mortality;
        vj["los_days"] = v.los_days;
        std::vector<std::string> cond, proc, drug;
        for (const auto& c : v.codes) {
            if (c.category == CodeCategory::condition) cond.push_back(c.id);
            else if (c.category == CodeCategory::procedure) proc.push_back(c.id);
            else drug.push_back(c.id);
        }
        vj["conditions"] = cond;
        vj["procedures"] = proc;
        vj["drugs"] = drug;
        visits.push_back(std::move(vj));
    }
    return j;
}

inline std::vector<Patient> load_ehr_jsonl(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::vector<Patient> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        out.push_back(patient_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

inline void save_ehr_jsonl(const std::string& path, const std::vector<Patient>& patients) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    for (const auto& p : patients) f << patient_to_json(p).dump() << '\n';
}

}  // namespace mg
