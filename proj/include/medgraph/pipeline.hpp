#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "medgraph/interpret.hpp"
#include "medgraph/synth.hpp"
#include "medgraph/train.hpp"

namespace mg {

// Errors surfaced to the CLI carry the stage that failed.
struct StageError : Error {
    std::string stage;
    StageError(std::string st, const std::string& msg)
        : Error("[" + st + "] " + msg), stage(std::move(st)) {}
};

struct PipelineConfig {
    std::string workdir = "run";
    // inputs; ignored when synth=true (the synth stage writes them)
    std::string ehr, triples, embeddings;
    bool synth = true;
    SynthConfig synth_cfg;
    // subgraph sampling
    std::size_t kappa = 2;
    std::size_t epsilon = 5;
    // clustering
    double delta = 0.15;
    Linkage linkage = Linkage::average;
    // model
    std::string task = "mortality";
    std::string mode = "joint";
    ModelConfig model;
    // training
    TrainConfig train;
    // explanation
    std::string explain_patient;  // patient id; empty = first patient
    std::size_t top_k = 10;
    std::string export_format = "graphml";
    std::uint64_t seed = 0;

    void apply(const std::string& key, const std::string& val);
    static PipelineConfig from_file(const std::string& path);
};

inline void PipelineConfig::apply(const std::string& key, const std::string& val) {
    auto as_bool = [&] {
        if (val == "true" || val == "1") return true;
        if (val == "false" || val == "0") return false;
        throw InvalidConfigError(key + ": expected a boolean, got " + val);
    };
    auto as_size = [&] { return static_cast<std::size_t>(std::stoull(val)); };
    auto as_u64 = [&] { return static_cast<std::uint64_t>(std::stoull(val)); };
    auto as_double = [&] { return std::stod(val); };

    if (key == "workdir") workdir = val;
    else if (key == "ehr") ehr = val;
    else if (key == "triples") triples = val;
    else if (key == "embeddings") embeddings = val;
    else if (key == "synth") synth = as_bool();
    else if (key == "synth.patients") synth_cfg.patients = as_size();
    else if (key == "synth.mean_visits") synth_cfg.mean_visits = as_double();
    else if (key == "synth.mean_conditions") synth_cfg.mean_conditions = as_double();
    else if (key == "synth.mean_procedures") synth_cfg.mean_procedures = as_double();
    else if (key == "synth.mean_drugs") synth_cfg.mean_drugs = as_double();
    else if (key == "synth.condition_vocab") synth_cfg.condition_vocab = as_size();
    else if (key == "synth.procedure_vocab") synth_cfg.procedure_vocab = as_size();
    else if (key == "synth.drug_vocab") synth_cfg.drug_vocab = as_size();
    else if (key == "synth.entity_pool") synth_cfg.entity_pool = as_size();
    else if (key == "synth.relation_pool") synth_cfg.relation_pool = as_size();
    else if (key == "synth.triples_per_code") synth_cfg.triples_per_code = as_size();
    else if (key == "synth.entity_triples") synth_cfg.entity_triples = as_size();
    else if (key == "synth.mortality_prevalence") synth_cfg.mortality_prevalence = as_double();
    else if (key == "synth.embedding_dim") synth_cfg.embedding_dim = as_size();
    else if (key == "kappa") kappa = as_size();
    else if (key == "epsilon") epsilon = as_size();
    else if (key == "delta") delta = as_double();
    else if (key == "linkage") linkage = linkage_from_string(val);
    else if (key == "task") task = val;
    else if (key == "mode") mode = val;
    else if (key == "node_attention") model.use_node_attention = as_bool();
    else if (key == "visit_attention") model.use_visit_attention = as_bool();
    else if (key == "edge_weights") model.use_edge_weights = as_bool();
    else if (key == "hidden_dim") model.hidden_dim = as_size();
    else if (key == "layers") model.layers = as_size();
    else if (key == "gamma") model.gamma = as_double();
    else if (key == "learning_rate") train.learning_rate = as_double();
    else if (key == "weight_decay") train.weight_decay = as_double();
    else if (key == "batch_size") train.batch_size = as_size();
    else if (key == "max_epochs") train.max_epochs = as_size();
    else if (key == "patience") train.patience = as_size();
    else if (key == "explain_patient") explain_patient = val;
    else if (key == "top_k") top_k = as_size();
    else if (key == "export_format") export_format = val;
    else if (key == "seed") { seed = as_u64(); train.seed = seed; synth_cfg.seed = seed; }
    else throw InvalidConfigError("unknown config key: " + key);
}

// Plain key=value lines; '#' starts a comment; unknown keys are errors.
inline PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    PipelineConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        try {
            cfg.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const InvalidConfigError& e) {
            throw InvalidConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

inline std::uint64_t file_hash(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot hash missing file: " + path);
    char buf[1 << 16];
    std::uint64_t h = 0xcbf29ce484222325ULL;
    while (f) {
        f.read(buf, sizeof(buf));
        h = fnv1a_bytes(buf, static_cast<std::size_t>(f.gcount()), h);
    }
    return h;
}

struct PipelineResult {
    nlohmann::json manifest;
    std::string manifest_path;
};

// Full run: (synth) -> ingest -> cluster -> compose -> train -> eval ->
// explain, leaving every artifact plus a manifest in the work directory.
// Manifest keys use file basenames so two runs of the same config in
// different directories produce byte-identical manifests.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.workdir);
    auto in_workdir = [&](const std::string& name) { return (fs::path(cfg.workdir) / name).string(); };

    nlohmann::json manifest;
    manifest["version"] = 1;
    manifest["seed"] = cfg.seed;
    manifest["task"] = cfg.task;
    manifest["mode"] = cfg.mode;
    manifest["delta"] = cfg.delta;
    manifest["kappa"] = cfg.kappa;
    manifest["epsilon"] = cfg.epsilon;
    auto& files = manifest["files"] = nlohmann::json::object();
    auto record = [&](const std::string& path) {
        char hex[32];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(file_hash(path)));
        files[fs::path(path).filename().string()] = hex;
    };

    // --- synth / inputs ---
    std::string ehr_path = cfg.ehr, triples_path = cfg.triples, emb_path = cfg.embeddings;
    if (cfg.synth) {
        try {
            SynthCohort cohort = generate_cohort(cfg.synth_cfg);
            ehr_path = in_workdir("ehr.jsonl");
            triples_path = in_workdir("triples.tsv");
            emb_path = in_workdir("embeddings.tsv");
            write_cohort_files(cohort, cfg.synth_cfg, ehr_path, triples_path, emb_path);
        } catch (const Error& e) {
            throw StageError("synth", e.what());
        }
    } else if (ehr_path.empty() || triples_path.empty() || emb_path.empty()) {
        throw StageError("config", "synth=false needs ehr, triples and embeddings paths");
    }
    record(ehr_path);
    record(triples_path);
    record(emb_path);

    // --- ingest: one sampled concept KG per EHR code ---
    std::vector<Patient> patients;
    std::vector<ConceptKg> concept_kgs;
    try {
        patients = load_ehr_jsonl(ehr_path);
        TripleStore store(load_triples_tsv(triples_path));
        std::set<MedicalCode> codes;
        for (const auto& p : patients)
            for (const auto& v : p.visits) codes.insert(v.codes.begin(), v.codes.end());
        for (const auto& code : codes)
            concept_kgs.push_back(
                sample_subgraph(code, store, cfg.kappa, cfg.epsilon, hash_string(code_key(code), cfg.seed)));
        manifest["codes"] = codes.size();
    } catch (const Error& e) {
        throw StageError("ingest", e.what());
    }

    // --- cluster into the global graph ---
    GlobalGraph graph;
    EmbeddingProvider provider(0, cfg.seed);
    try {
        provider = EmbeddingProvider::load(emb_path, cfg.seed);
        graph = cluster_and_build(concept_kgs, provider, cfg.delta, cfg.linkage);
        save_global_graph(graph, in_workdir("global_graph.json"));
    } catch (const Error& e) {
        throw StageError("cluster", e.what());
    }
    record(in_workdir("global_graph.json"));
    record(in_workdir("global_graph.bin"));
    manifest["global_nodes"] = graph.node_count();
    manifest["edge_types"] = graph.edge_type_count();

    // --- compose + train ---
    TaskSpec task;
    TrainConfig tcfg = cfg.train;
    ModelConfig mcfg = cfg.model;
    std::vector<std::string> drug_vocab = drug_vocabulary(patients);
    std::size_t max_visits = 1;
    for (const auto& p : patients) max_visits = std::max(max_visits, p.visits.size());
    TrainResult tr;
    PreparedData data;
    try {
        mcfg.mode = readout_from_string(cfg.mode);
        task = TaskSpec::make(task_from_string(cfg.task), drug_vocab.size());
        BatParams params = BatParams::init(graph.dim, mcfg.hidden_dim, graph.node_count(), max_visits,
                                           graph.edge_type_count() + 1, mcfg.layers, mcfg.mode,
                                           task.output_size, cfg.seed);
        params.apply_attention_init(graph.node_emb, provider.get(normalize_term(task.task_term)));
        BatModel model(std::move(params), mcfg, graph);
        data = prepare_data(patients, graph, model, task, tcfg);
        tr = train(model, data, task, tcfg);
        model.params() = tr.best_params;
        nlohmann::json extra;
        extra["graph"] = fs::absolute(in_workdir("global_graph.json")).string();
        extra["patients"] = fs::absolute(ehr_path).string();
        extra["max_visits"] = data.max_visits;
        extra["drug_vocab"] = drug_vocab;
        extra["best_epoch"] = tr.best_epoch;
        save_checkpoint(in_workdir("model.ckpt"), model.params(), mcfg, task, cfg.seed, extra);
        manifest["train"] = {{"samples", data.train.size()},
                             {"epochs_run", tr.history.size()},
                             {"best_epoch", tr.best_epoch},
                             {"best_val_auroc", tr.best_val_auroc}};
    } catch (const Error& e) {
        throw StageError("train", e.what());
    }
    record(in_workdir("model.ckpt"));

    // --- eval on the held-out test split ---
    try {
        BatModel model(tr.best_params, mcfg, graph);
        EvalOutputs out = collect_outputs(model, data.test, data.max_visits, task);
        nlohmann::json report = metrics_report(out, task);
        std::ofstream mf(in_workdir("metrics.json"), std::ios::binary);
        mf << report.dump(2) << '\n';
        manifest["metrics"] = report;
    } catch (const Error& e) {
        throw StageError("eval", e.what());
    }
    record(in_workdir("metrics.json"));

    // --- explain one patient ---
    try {
        const Patient* target = nullptr;
        if (cfg.explain_patient.empty()) {
            target = &patients.front();
        } else {
            for (const auto& p : patients)
                if (p.id == cfg.explain_patient) target = &p;
            if (!target) throw UnknownEntityError("no such patient: " + cfg.explain_patient);
        }
        BatModel model(tr.best_params, mcfg, graph);
        Patient filtered = filter_patient_features(*target, task);
        PatientGraph pg = compose_patient_graph(filtered, graph, data.max_visits);
        GraphLayout lo = model.layout(pg, data.max_visits);
        Tape tape;
        ForwardResult fr = model.forward(tape, lo, data.max_visits);
        ImportanceReport rep = importance_scores(model, pg, fr);
        ExportFormat fmt = export_format_from_string(cfg.export_format);
        std::string ext = fmt == ExportFormat::dot ? ".dot" : ".graphml";
        export_graph(in_workdir("explanation" + ext), fmt, graph, pg, rep);
        TopK tk = top_k(rep, cfg.top_k);
        nlohmann::json jt;
        jt["patient"] = target->id;
        auto& nodes = jt["nodes"] = nlohmann::json::array();
        for (const auto& n : tk.nodes)
            nodes.push_back({{"node", n.node},
                             {"label", node_display_label(graph, pg, n.node)},
                             {"score", n.score}});
        auto& edges = jt["edges"] = nlohmann::json::array();
        for (const auto& e : tk.edges)
            edges.push_back({{"a", e.edge.a}, {"type", e.edge.type}, {"b", e.edge.b}, {"score", e.score}});
        std::ofstream tf(in_workdir("top_k.json"), std::ios::binary);
        tf << jt.dump(2) << '\n';
        manifest["explained_patient"] = target->id;
        record(in_workdir("explanation" + ext));
    } catch (const Error& e) {
        throw StageError("explain", e.what());
    }
    record(in_workdir("top_k.json"));

    PipelineResult result;
    result.manifest = std::move(manifest);
    result.manifest_path = in_workdir("manifest.json");
    std::ofstream mf(result.manifest_path, std::ios::binary);
    if (!mf) throw IoError("cannot write manifest: " + result.manifest_path);
    mf << result.manifest.dump(2) << '\n';
    return result;
}

}  // namespace mg
