// Command-line front end for the medgraph library. Subcommands mirror the
// pipeline stages; `pipeline` runs them all from one config file.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "medgraph/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mg;

namespace {

// Concept-KG files are named "<category>__<normalized id>.tsv" so the code
// identity survives the trip through the filesystem.
std::string concept_kg_filename(const MedicalCode& code) {
    std::string id = normalize_term(code.id);
    for (auto& c : id)
        if (c == ' ' || c == '/') c = '-';
    return std::string(to_string(code.category)) + "__" + id + ".tsv";
}

MedicalCode code_from_filename(const std::string& path) {
    std::string stem = fs::path(path).stem().string();
    std::size_t sep = stem.find("__");
    if (sep == std::string::npos)
        throw InvalidConfigError("cannot infer code from filename (want category__id.tsv): " + path);
    MedicalCode code;
    code.category = category_from_string(stem.substr(0, sep));
    code.id = stem.substr(sep + 2);
    for (auto& c : code.id)
        if (c == '-') c = ' ';
    return code;
}

MedicalCode parse_code_arg(const std::string& s) {
    std::size_t colon = s.find(':');
    if (colon == std::string::npos)
        throw InvalidConfigError("expected category:id, got " + s);
    return {s.substr(colon + 1), category_from_string(s.substr(0, colon))};
}

struct TrainArtifacts {
    BatModel model;
    TaskSpec task;
    PreparedData data;
    std::vector<Patient> patients;
};

// Rebuilds model + splits from a checkpoint directory; eval and explain both
// need the identical preparation the train subcommand used.
TrainArtifacts reload_from_checkpoint(const std::string& ckpt_dir, GlobalGraph& graph_out) {
    Checkpoint ck = load_checkpoint((fs::path(ckpt_dir) / "model.ckpt").string());
    std::string graph_path = ck.extra.at("graph").get<std::string>();
    std::string ehr_path = ck.extra.at("patients").get<std::string>();
    graph_out = load_global_graph(graph_path);
    std::vector<Patient> patients = load_ehr_jsonl(ehr_path);
    std::vector<std::string> drug_vocab = ck.extra.at("drug_vocab").get<std::vector<std::string>>();
    TaskSpec task = TaskSpec::make(ck.task, drug_vocab.size());
    TrainConfig tcfg;
    tcfg.seed = ck.seed;
    BatModel model(std::move(ck.params), ck.config, graph_out);
    PreparedData data = prepare_data(patients, graph_out, model, task, tcfg);
    return {std::move(model), task, std::move(data), std::move(patients)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"personalized knowledge-graph engine for clinical prediction"};
    app.require_subcommand(1);

    // --- synth ---
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic cohort + triple store");
    SynthConfig synth_cfg;
    std::string synth_out = "data";
    bool synth_mimic3 = false;
    synth_cmd->add_option("--patients", synth_cfg.patients, "cohort size");
    synth_cmd->add_option("--mean-visits", synth_cfg.mean_visits, "mean visits per patient");
    synth_cmd->add_option("--mean-conditions", synth_cfg.mean_conditions, "mean conditions per patient");
    synth_cmd->add_option("--mean-procedures", synth_cfg.mean_procedures, "mean procedures per patient");
    synth_cmd->add_option("--mean-drugs", synth_cfg.mean_drugs, "mean drugs per patient");
    synth_cmd->add_option("--condition-vocab", synth_cfg.condition_vocab, "condition vocabulary size");
    synth_cmd->add_option("--procedure-vocab", synth_cfg.procedure_vocab, "procedure vocabulary size");
    synth_cmd->add_option("--drug-vocab", synth_cfg.drug_vocab, "drug vocabulary size");
    synth_cmd->add_option("--mortality-prevalence", synth_cfg.mortality_prevalence, "positive rate");
    synth_cmd->add_option("--embedding-dim", synth_cfg.embedding_dim, "embedding width");
    synth_cmd->add_option("--seed", synth_cfg.seed, "rng seed");
    synth_cmd->add_flag("--mimic3-like", synth_mimic3, "use MIMIC-III-scale cohort statistics");
    synth_cmd->add_option("--out-dir", synth_out, "output directory")->required();

    // --- ingest ---
    auto* ingest_cmd = app.add_subcommand("ingest", "build one code's concept KG");
    std::vector<std::string> ingest_triples;
    std::string ingest_mode = "store", ingest_code, ingest_out;
    std::size_t chi = 0, kappa = 2, epsilon = 5;
    std::uint64_t ingest_seed = 0;
    ingest_cmd->add_option("--triples", ingest_triples, "triple TSV (store) or raw LLM text files, one per run (llm)")
        ->required()->expected(-1);
    ingest_cmd->add_option("--mode", ingest_mode, "llm or store")
        ->check(CLI::IsMember({"llm", "store"}));
    ingest_cmd->add_option("--code", ingest_code, "target code as category:id")->required();
    ingest_cmd->add_option("--chi", chi, "llm runs to aggregate (0 = all given files)");
    ingest_cmd->add_option("--kappa", kappa, "sampling hop limit");
    ingest_cmd->add_option("--epsilon", epsilon, "triples per frontier entity beyond hop 1");
    ingest_cmd->add_option("--seed", ingest_seed, "rng seed");
    ingest_cmd->add_option("--out", ingest_out, "output TSV ('auto' = category__id.tsv)")->required();

    // --- cluster ---
    auto* cluster_cmd = app.add_subcommand("cluster", "cluster concept KGs into the global graph");
    std::vector<std::string> cluster_triples;
    std::string cluster_emb, cluster_out, cluster_linkage = "average";
    double delta = 0.15;
    std::uint64_t cluster_seed = 0;
    cluster_cmd->add_option("--triples", cluster_triples, "concept-KG TSVs named category__id.tsv")
        ->required()->expected(-1);
    cluster_cmd->add_option("--embeddings", cluster_emb, "embedding table")->required();
    cluster_cmd->add_option("--delta", delta, "cosine-distance merge threshold");
    cluster_cmd->add_option("--linkage", cluster_linkage, "average or complete")
        ->check(CLI::IsMember({"average", "complete"}));
    cluster_cmd->add_option("--seed", cluster_seed, "fallback-embedding seed");
    cluster_cmd->add_option("--out", cluster_out, "output global_graph.json")->required();

    // --- compose ---
    auto* compose_cmd = app.add_subcommand("compose", "compose per-patient visit subgraphs");
    std::string compose_ehr, compose_graph, compose_out;
    std::size_t compose_max_visits = 0;
    compose_cmd->add_option("--ehr", compose_ehr, "EHR JSONL")->required();
    compose_cmd->add_option("--graph", compose_graph, "global_graph.json")->required();
    compose_cmd->add_option("--max-visits", compose_max_visits, "visit capacity (0 = dataset max)");
    compose_cmd->add_option("--out", compose_out, "output patients.bin")->required();

    // --- train ---
    auto* train_cmd = app.add_subcommand("train", "train the temporal GNN");
    std::string train_ehr, train_graph, train_emb, train_task = "mortality", train_mode = "joint";
    std::string train_ablate, train_out;
    ModelConfig train_model;
    train_model.layers = 2;  // single-layer models carry no entity importance
    TrainConfig train_cfg;
    train_cmd->add_option("--patients", train_ehr, "EHR JSONL")->required();
    train_cmd->add_option("--graph", train_graph, "global_graph.json")->required();
    train_cmd->add_option("--embeddings", train_emb, "embedding table for attention init (optional)");
    train_cmd->add_option("--task", train_task, "prediction task")
        ->check(CLI::IsMember({"mortality", "readmission", "los", "drugrec"}));
    train_cmd->add_option("--mode", train_mode, "readout mode")
        ->check(CLI::IsMember({"graph", "node", "joint"}));
    train_cmd->add_option("--ablate", train_ablate, "comma list of a (node attn), b (visit attn), w (edge weights)");
    train_cmd->add_option("--hidden-dim", train_model.hidden_dim, "hidden width q");
    train_cmd->add_option("--layers", train_model.layers, "conv layers L");
    train_cmd->add_option("--gamma", train_model.gamma, "visit decay rate");
    train_cmd->add_option("--lr", train_cfg.learning_rate, "learning rate");
    train_cmd->add_option("--weight-decay", train_cfg.weight_decay, "L2 coefficient");
    train_cmd->add_option("--batch-size", train_cfg.batch_size, "batch size");
    train_cmd->add_option("--epochs", train_cfg.max_epochs, "max epochs");
    train_cmd->add_option("--patience", train_cfg.patience, "early-stopping patience");
    train_cmd->add_option("--seed", train_cfg.seed, "rng seed");
    train_cmd->add_option("--out", train_out, "checkpoint directory")->required();

    // --- eval ---
    auto* eval_cmd = app.add_subcommand("eval", "metrics report for a checkpoint");
    std::string eval_ckpt, eval_split = "test", eval_out;
    eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint directory")->required();
    eval_cmd->add_option("--split", eval_split, "train, val or test")
        ->check(CLI::IsMember({"train", "val", "test"}));
    eval_cmd->add_option("--out", eval_out, "write report here instead of stdout");

    // --- explain ---
    auto* explain_cmd = app.add_subcommand("explain", "export an annotated patient graph");
    std::string explain_ckpt, explain_patient, explain_format = "graphml", explain_out;
    std::size_t explain_k = 20;
    explain_cmd->add_option("--ckpt", explain_ckpt, "checkpoint directory")->required();
    explain_cmd->add_option("--patient", explain_patient, "patient id")->required();
    explain_cmd->add_option("--k", explain_k, "top-k entities/relations to print");
    explain_cmd->add_option("--format", explain_format, "dot or graphml")
        ->check(CLI::IsMember({"dot", "graphml"}));
    explain_cmd->add_option("--out", explain_out, "output file")->required();

    // --- pipeline ---
    auto* pipe_cmd = app.add_subcommand("pipeline", "run every stage from a config file");
    std::string pipe_config;
    std::vector<std::string> pipe_sets;
    pipe_cmd->add_option("config", pipe_config, "key=value config file")->required();
    pipe_cmd->add_option("--set", pipe_sets, "override config keys (key=value, repeatable)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) {
            if (synth_mimic3) {
                std::uint64_t seed = synth_cfg.seed;
                synth_cfg = SynthConfig::mimic3_like();
                synth_cfg.seed = seed;
            }
            fs::create_directories(synth_out);
            SynthCohort cohort = generate_cohort(synth_cfg);
            write_cohort_files(cohort, synth_cfg, (fs::path(synth_out) / "ehr.jsonl").string(),
                               (fs::path(synth_out) / "triples.tsv").string(),
                               (fs::path(synth_out) / "embeddings.tsv").string());
            std::cout << "wrote " << cohort.patients.size() << " patients, "
                      << cohort.store_triples.size() << " store triples to " << synth_out << "\n";
        } else if (*ingest_cmd) {
            MedicalCode code = parse_code_arg(ingest_code);
            ConceptKg kg;
            if (ingest_mode == "store") {
                std::vector<Triple> all;
                for (const auto& p : ingest_triples) {
                    auto t = load_triples_tsv(p);
                    all.insert(all.end(), t.begin(), t.end());
                }
                TripleStore store(std::move(all));
                kg = sample_subgraph(code, store, kappa, epsilon, ingest_seed);
            } else {
                std::vector<std::vector<Triple>> runs;
                std::size_t limit = chi == 0 ? ingest_triples.size() : chi;
                std::size_t skipped = 0;
                for (std::size_t i = 0; i < ingest_triples.size() && i < limit; ++i) {
                    std::ifstream f(ingest_triples[i], std::ios::binary);
                    if (!f) throw IoError("cannot open: " + ingest_triples[i]);
                    std::string text((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
                    ParseResult pr = parse_llm_triples(text);
                    skipped += pr.skipped;
                    runs.push_back(std::move(pr.triples));
                }
                kg = aggregate_runs(runs, code);
                if (skipped) std::cerr << "skipped " << skipped << " malformed fragments\n";
            }
            std::string out = ingest_out == "auto" ? concept_kg_filename(code) : ingest_out;
            save_triples_tsv(out, kg.triples);
            std::cout << "wrote " << kg.triples.size() << " triples to " << out << "\n";
        } else if (*cluster_cmd) {
            std::vector<ConceptKg> kgs;
            for (const auto& path : cluster_triples) {
                ConceptKg kg;
                kg.code = code_from_filename(path);
                for (const auto& t : load_triples_tsv(path)) kg.add(t);
                kgs.push_back(std::move(kg));
            }
            EmbeddingProvider provider = EmbeddingProvider::load(cluster_emb, cluster_seed);
            GlobalGraph g = cluster_and_build(kgs, provider, delta, linkage_from_string(cluster_linkage));
            save_global_graph(g, cluster_out);
            std::cout << "global graph: " << g.node_count() << " node clusters, "
                      << g.edge_type_count() << " relation clusters, " << g.edges.size()
                      << " edges -> " << cluster_out << "\n";
        } else if (*compose_cmd) {
            GlobalGraph g = load_global_graph(compose_graph);
            std::vector<Patient> patients = load_ehr_jsonl(compose_ehr);
            std::size_t max_visits = compose_max_visits;
            if (max_visits == 0)
                for (const auto& p : patients) max_visits = std::max(max_visits, p.visits.size());
            std::vector<PatientGraph> graphs;
            for (const auto& p : patients) graphs.push_back(compose_patient_graph(p, g, max_visits));
            save_patient_graphs(compose_out, graphs);
            std::cout << "composed " << graphs.size() << " patient graphs -> " << compose_out << "\n";
        } else if (*train_cmd) {
            for (char c : train_ablate) {
                if (c == 'a') train_model.use_node_attention = false;
                else if (c == 'b') train_model.use_visit_attention = false;
                else if (c == 'w') train_model.use_edge_weights = false;
                else if (c != ',' && c != ' ')
                    throw InvalidConfigError(std::string("unknown ablation flag: ") + c);
            }
            train_model.mode = readout_from_string(train_mode);
            GlobalGraph g = load_global_graph(train_graph);
            std::vector<Patient> patients = load_ehr_jsonl(train_ehr);
            std::vector<std::string> drug_vocab = drug_vocabulary(patients);
            TaskSpec task = TaskSpec::make(task_from_string(train_task), drug_vocab.size());
            std::size_t max_visits = 1;
            for (const auto& p : patients) max_visits = std::max(max_visits, p.visits.size());
            BatParams params = BatParams::init(g.dim, train_model.hidden_dim, g.node_count(),
                                               max_visits, g.edge_type_count() + 1,
                                               train_model.layers, train_model.mode,
                                               task.output_size, train_cfg.seed);
            EmbeddingProvider provider = train_emb.empty()
                                             ? EmbeddingProvider(g.dim, train_cfg.seed)
                                             : EmbeddingProvider::load(train_emb, train_cfg.seed);
            params.apply_attention_init(g.node_emb, provider.get(normalize_term(task.task_term)));
            BatModel model(std::move(params), train_model, g);
            PreparedData data = prepare_data(patients, g, model, task, train_cfg);
            TrainResult tr = train(model, data, task, train_cfg);
            model.params() = tr.best_params;

            fs::create_directories(train_out);
            nlohmann::json extra;
            extra["graph"] = fs::absolute(train_graph).string();
            extra["patients"] = fs::absolute(train_ehr).string();
            extra["drug_vocab"] = drug_vocab;
            extra["max_visits"] = data.max_visits;
            save_checkpoint((fs::path(train_out) / "model.ckpt").string(), model.params(),
                            train_model, task, train_cfg.seed, extra);
            nlohmann::json hist = nlohmann::json::array();
            for (const auto& r : tr.history)
                hist.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss},
                                {"val_auroc", r.val_auroc}});
            std::ofstream hf(fs::path(train_out) / "history.json", std::ios::binary);
            hf << hist.dump(2) << '\n';
            std::cout << "best epoch " << tr.best_epoch << ", val auroc " << tr.best_val_auroc
                      << " -> " << train_out << "\n";
        } else if (*eval_cmd) {
            GlobalGraph g;
            TrainArtifacts art = reload_from_checkpoint(eval_ckpt, g);
            const auto& set = eval_split == "train" ? art.data.train
                              : eval_split == "val" ? art.data.val
                                                    : art.data.test;
            EvalOutputs out = collect_outputs(art.model, set, art.data.max_visits, art.task);
            nlohmann::json report = metrics_report(out, art.task);
            report["split"] = eval_split;
            if (eval_out.empty()) {
                std::cout << report.dump(2) << "\n";
            } else {
                std::ofstream f(eval_out, std::ios::binary);
                f << report.dump(2) << '\n';
            }
        } else if (*explain_cmd) {
            GlobalGraph g;
            TrainArtifacts art = reload_from_checkpoint(explain_ckpt, g);
            const Patient* target = nullptr;
            for (const auto& p : art.patients)
                if (p.id == explain_patient) target = &p;
            if (!target) throw UnknownEntityError("no such patient: " + explain_patient);
            Patient filtered = filter_patient_features(*target, art.task);
            PatientGraph pg = compose_patient_graph(filtered, g, art.data.max_visits);
            GraphLayout lo = art.model.layout(pg, art.data.max_visits);
            Tape tape;
            ForwardResult fr = art.model.forward(tape, lo, art.data.max_visits);
            ImportanceReport rep = importance_scores(art.model, pg, fr);
            export_graph(explain_out, export_format_from_string(explain_format), g, pg, rep);
            TopK tk = top_k(rep, explain_k);
            for (const auto& n : tk.nodes)
                std::cout << "entity " << n.node << " " << node_display_label(g, pg, n.node)
                          << " score " << n.score << "\n";
            for (const auto& e : tk.edges)
                std::cout << "relation " << e.edge.a << " -[" << e.edge.type << "]- " << e.edge.b
                          << " score " << e.score << "\n";
            std::cout << "wrote " << explain_out << "\n";
        } else if (*pipe_cmd) {
            PipelineConfig cfg = PipelineConfig::from_file(pipe_config);
            for (const auto& kv : pipe_sets) {
                std::size_t eq = kv.find('=');
                if (eq == std::string::npos) throw InvalidConfigError("--set wants key=value: " + kv);
                cfg.apply(kv.substr(0, eq), kv.substr(eq + 1));
            }
            PipelineResult res = run_pipeline(cfg);
            std::cout << "pipeline complete; manifest at " << res.manifest_path << "\n";
        }
    } catch (const StageError& e) {
        std::cerr << "error in stage " << e.stage << ": " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
