#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "medgraph/embedding.hpp"
#include "medgraph/patient.hpp"
#include "medgraph/store.hpp"

namespace mg {

// Calibration targets default to the MIMIC-III-like statistics; labels come
// from a planted linear rule over a hidden subset of codes so that trained
// models have real signal to find.
struct SynthConfig {
    std::size_t patients = 1000;
    double mean_visits = 1.24;
    double mean_conditions = 12.89;  // per patient
    double mean_procedures = 4.54;
    double mean_drugs = 33.71;
    std::size_t condition_vocab = 40;
    std::size_t procedure_vocab = 15;
    std::size_t drug_vocab = 30;
    std::size_t entity_pool = 120;     // shared non-code entities in the store
    std::size_t relation_pool = 20;
    std::size_t triples_per_code = 4;
    std::size_t entity_triples = 200;  // entity-to-entity links for deeper hops
    double mortality_prevalence = 0.3;
    double readmission_mean_gap_days = 20.0;
    double los_log_mean = 1.2;         // lognormal parameters, days
    double los_log_sigma = 0.8;
    double label_flip_rate = 0.02;     // noise on the planted labels
    double signal_strength = 2.0;      // planted weight magnitude
    std::size_t embedding_dim = 24;
    std::uint64_t seed = 0;

    // Cohort-scale statistics of the public MIMIC-III tables.
    static SynthConfig mimic3_like() {
        SynthConfig c;
        c.patients = 35707;
        c.mean_visits = 1.24;
        c.mean_conditions = 12.89;
        c.mean_procedures = 4.54;
        c.mean_drugs = 33.71;
        return c;
    }

    void validate() const {
        if (patients == 0) throw InvalidConfigError("synth: need at least one patient");
        if (mean_visits < 1.0 || mean_conditions <= 0 || mean_procedures <= 0 || mean_drugs <= 0)
            throw InvalidConfigError("synth: means must be positive (visits >= 1)");
        if (!(mortality_prevalence > 0.0 && mortality_prevalence < 1.0))
            throw InvalidConfigError("synth: prevalence must be in (0, 1)");
        if (condition_vocab == 0 || procedure_vocab == 0 || drug_vocab == 0)
            throw InvalidConfigError("synth: vocabularies must be non-empty");
    }
};

struct SynthCohort {
    std::vector<Patient> patients;
    std::vector<Triple> store_triples;
    std::vector<std::string> all_strings;        // everything that needs an embedding
    std::vector<MedicalCode> code_vocab;
    std::vector<double> planted_weights;         // parallel to code_vocab
    double planted_threshold = 0.0;
};

namespace detail {

inline std::size_t poisson_draw(Rng& rng, double mean) {
    // Knuth; fine for the small means used here.
    double limit = std::exp(-mean);
    double prod = rng.next_unit();
    std::size_t n = 0;
    while (prod > limit) {
        prod *= rng.next_unit();
        ++n;
    }
    return n;
}

inline std::string code_name(CodeCategory cat, std::size_t i) {
    const char* prefix = cat == CodeCategory::condition ? "cond" : cat == CodeCategory::procedure ? "proc" : "drug";
    return std::string(prefix) + " " + std::to_string(i);
}

}  // namespace detail

inline SynthCohort generate_cohort(const SynthConfig& cfg) {
    cfg.validate();
    SynthCohort out;

    for (std::size_t i = 0; i < cfg.condition_vocab; ++i)
        out.code_vocab.push_back({detail::code_name(CodeCategory::condition, i), CodeCategory::condition});
    for (std::size_t i = 0; i < cfg.procedure_vocab; ++i)
        out.code_vocab.push_back({detail::code_name(CodeCategory::procedure, i), CodeCategory::procedure});
    for (std::size_t i = 0; i < cfg.drug_vocab; ++i)
        out.code_vocab.push_back({detail::code_name(CodeCategory::drug, i), CodeCategory::drug});

    std::vector<std::string> entities, relations;
    for (std::size_t i = 0; i < cfg.entity_pool; ++i) entities.push_back("entity " + std::to_string(i));
    for (std::size_t i = 0; i < cfg.relation_pool; ++i) relations.push_back("relates to " + std::to_string(i));

    // triple store: star triples per code, plus entity-entity links
    Rng store_rng(cfg.seed ^ 0x570feULL);
    for (const auto& code : out.code_vocab) {
        for (std::size_t t = 0; t < cfg.triples_per_code; ++t) {
            const std::string& rel = relations[store_rng.next_below(relations.size())];
            const std::string& ent = entities[store_rng.next_below(entities.size())];
            if (store_rng.next_unit() < 0.5) out.store_triples.push_back({code.id, rel, ent});
            else out.store_triples.push_back({ent, rel, code.id});
        }
    }
    for (std::size_t t = 0; t < cfg.entity_triples; ++t) {
        const std::string& a = entities[store_rng.next_below(entities.size())];
        const std::string& b = entities[store_rng.next_below(entities.size())];
        const std::string& rel = relations[store_rng.next_below(relations.size())];
        if (a != b) out.store_triples.push_back({a, rel, b});
    }
    std::sort(out.store_triples.begin(), out.store_triples.end());
    out.store_triples.erase(std::unique(out.store_triples.begin(), out.store_triples.end()),
                            out.store_triples.end());

    for (const auto& c : out.code_vocab) out.all_strings.push_back(c.id);
    out.all_strings.insert(out.all_strings.end(), entities.begin(), entities.end());
    out.all_strings.insert(out.all_strings.end(), relations.begin(), relations.end());

    // planted rule over conditions and drugs
    Rng rule_rng(cfg.seed ^ 0x91eULL);
    out.planted_weights.assign(out.code_vocab.size(), 0.0);
    for (std::size_t i = 0; i < out.code_vocab.size(); ++i) {
        if (out.code_vocab[i].category == CodeCategory::procedure) continue;
        double u = rule_rng.next_unit();
        if (u < 0.25) out.planted_weights[i] = cfg.signal_strength;
        else if (u < 0.40) out.planted_weights[i] = -cfg.signal_strength;
    }

    // Per-patient generation with derived seeds, so parallel generation
    // could never change the output.
    struct VisitDraft {
        std::vector<std::size_t> code_idx;
        double score = 0.0;
        double gap_days = 0.0;
        double los_days = 0.0;
    };
    std::vector<std::vector<VisitDraft>> drafts(cfg.patients);
    std::vector<double> all_scores;

    for (std::size_t pi = 0; pi < cfg.patients; ++pi) {
        Rng rng(cfg.seed + 0x1000 + pi);
        std::size_t nvisits = 1 + detail::poisson_draw(rng, cfg.mean_visits - 1.0);
        auto& pv = drafts[pi];
        for (std::size_t v = 0; v < nvisits; ++v) {
            VisitDraft d;
            auto draw = [&](CodeCategory cat, double mean_per_patient, std::size_t offset, std::size_t span) {
                double mean_per_visit = mean_per_patient / cfg.mean_visits;
                std::size_t n = detail::poisson_draw(rng, mean_per_visit);
                n = std::min(n, span);
                std::set<std::size_t> chosen;
                while (chosen.size() < n) chosen.insert(offset + rng.next_below(span));
                for (std::size_t c : chosen) d.code_idx.push_back(c);
                (void)cat;
            };
            draw(CodeCategory::condition, cfg.mean_conditions, 0, cfg.condition_vocab);
            draw(CodeCategory::procedure, cfg.mean_procedures, cfg.condition_vocab, cfg.procedure_vocab);
            draw(CodeCategory::drug, cfg.mean_drugs, cfg.condition_vocab + cfg.procedure_vocab,
                 cfg.drug_vocab);
            if (d.code_idx.empty()) d.code_idx.push_back(rng.next_below(cfg.condition_vocab));
            for (std::size_t c : d.code_idx) d.score += out.planted_weights[c];
            d.gap_days = 1.0 + cfg.readmission_mean_gap_days * (-std::log(1.0 - rng.next_unit()));
            d.los_days = std::exp(cfg.los_log_mean + cfg.los_log_sigma * rng.next_gaussian());
            // a touch of planted signal in LOS too
            d.los_days = std::max(0.2, d.los_days + 0.3 * d.score);
            pv.push_back(std::move(d));
            all_scores.push_back(pv.back().score);
        }
    }

    // threshold at the (1 - prevalence) quantile of visit scores
    std::vector<double> sorted_scores = all_scores;
    std::sort(sorted_scores.begin(), sorted_scores.end());
    std::size_t qidx = static_cast<std::size_t>((1.0 - cfg.mortality_prevalence) *
                                                static_cast<double>(sorted_scores.size()));
    qidx = std::min(qidx, sorted_scores.size() - 1);
    out.planted_threshold = sorted_scores[qidx];

    for (std::size_t pi = 0; pi < cfg.patients; ++pi) {
        Rng rng(cfg.seed + 0x2000'0000 + pi);
        Patient p;
        p.id = "synth-" + std::to_string(pi);
        double clock = 0.0;
        for (std::size_t v = 0; v < drafts[pi].size(); ++v) {
            const VisitDraft& d = drafts[pi][v];
            Visit visit;
            visit.admit_time = clock;
            visit.los_days = d.los_days;
            visit.discharge_time = clock + d.los_days;
            // Mortality for visit v is decided by the previous visit's codes,
            // so prefixes carry the signal a model can actually use.
            double basis = v == 0 ? d.score : drafts[pi][v - 1].score;
            int label = basis >= out.planted_threshold ? 1 : 0;
            if (rng.next_unit() < cfg.label_flip_rate) label = 1 - label;
            visit.mortality = label;
            for (std::size_t c : d.code_idx) visit.codes.push_back(out.code_vocab[c]);
            clock = visit.discharge_time + d.gap_days;
            p.visits.push_back(std::move(visit));
        }
        out.patients.push_back(std::move(p));
    }
    return out;
}

// Writes the three pipeline inputs: EHR records, the triple store, and an
// embedding table (deterministic unit vectors keyed on string + seed).
inline void write_cohort_files(const SynthCohort& cohort, const SynthConfig& cfg,
                               const std::string& ehr_path, const std::string& triples_path,
                               const std::string& embeddings_path) {
    save_ehr_jsonl(ehr_path, cohort.patients);
    save_triples_tsv(triples_path, cohort.store_triples);
    EmbeddingProvider provider(cfg.embedding_dim, cfg.seed);
    for (const auto& s : cohort.all_strings) provider.put(normalize_term(s), provider.fallback(normalize_term(s)));
    provider.save(embeddings_path);
}

}  // namespace mg
