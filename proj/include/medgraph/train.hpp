#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "medgraph/metrics.hpp"
#include "medgraph/model.hpp"

namespace mg {

struct Sample {
    std::size_t patient_index = 0;
    std::size_t prefix = 0;            // number of input visits
    std::vector<double> label;         // {y} binary, {class} multi-class, multi-hot multi-label
};

struct TrainConfig {
    double learning_rate = 1e-5;
    double weight_decay = 1e-5;
    std::size_t batch_size = 4;
    std::size_t max_epochs = 50;
    std::size_t patience = 10;
    double split_train = 0.8, split_val = 0.1, split_test = 0.1;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
};

inline std::vector<std::string> drug_vocabulary(const std::vector<Patient>& patients) {
    std::set<std::string> v;
    for (const auto& p : patients)
        for (const auto& visit : p.visits)
            for (const auto& c : visit.codes)
                if (c.category == CodeCategory::drug) v.insert(c.id);
    return {v.begin(), v.end()};
}

// Prefix samples per task. Mortality/readmission predict the next visit from
// visits 1..t-1 and need at least two visits; LOS and drug recommendation
// label the last input visit itself.
inline std::vector<Sample> make_samples(const std::vector<Patient>& patients, const TaskSpec& task,
                                        const std::vector<std::string>& drug_vocab = {}) {
    std::vector<Sample> out;
    for (std::size_t pi = 0; pi < patients.size(); ++pi) {
        const auto& visits = patients[pi].visits;
        switch (task.kind) {
            case TaskKind::mortality:
                for (std::size_t t = 2; t <= visits.size(); ++t)
                    out.push_back({pi, t - 1, {static_cast<double>(visits[t - 1].mortality)}});
                break;
            case TaskKind::readmission:
                for (std::size_t t = 2; t <= visits.size(); ++t) {
                    double gap = visits[t - 1].admit_time - visits[t - 2].admit_time;
                    out.push_back({pi, t - 1, {gap <= kReadmissionWindowDays ? 1.0 : 0.0}});
                }
                break;
            case TaskKind::los:
                for (std::size_t t = 1; t <= visits.size(); ++t)
                    out.push_back({pi, t, {static_cast<double>(los_class_of(visits[t - 1].los_days))}});
                break;
            case TaskKind::drugrec: {
                for (std::size_t t = 1; t <= visits.size(); ++t) {
                    std::vector<double> y(drug_vocab.size(), 0.0);
                    for (const auto& c : visits[t - 1].codes)
                        if (c.category == CodeCategory::drug) {
                            auto it = std::lower_bound(drug_vocab.begin(), drug_vocab.end(), c.id);
                            if (it != drug_vocab.end() && *it == c.id)
                                y[static_cast<std::size_t>(it - drug_vocab.begin())] = 1.0;
                        }
                    out.push_back({pi, t, std::move(y)});
                }
                break;
            }
        }
    }
    return out;
}

// Patient-level split; all samples of one patient stay together.
inline std::vector<int> split_patients(std::size_t n, const TrainConfig& cfg) {
    if (std::abs(cfg.split_train + cfg.split_val + cfg.split_test - 1.0) > 1e-9)
        throw InvalidConfigError("split ratios must sum to 1");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(cfg.seed ^ 0x5eedULL);
    rng.shuffle(order);
    std::size_t ntrain = static_cast<std::size_t>(cfg.split_train * static_cast<double>(n));
    std::size_t nval = static_cast<std::size_t>(cfg.split_val * static_cast<double>(n));
    std::vector<int> split(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        if (i < ntrain) split[order[i]] = 0;
        else if (i < ntrain + nval) split[order[i]] = 1;
    }
    return split;
}

// --- Adam with L2 folded into the gradient ---

struct AdamState {
    std::vector<Tensor> m, v;
    std::size_t step = 0;

    static AdamState init_like(const BatParams& p) {
        AdamState s;
        p.for_each([&](const char*, const Tensor& t) {
            s.m.emplace_back(t.rows, t.cols);
            s.v.emplace_back(t.rows, t.cols);
        });
        return s;
    }
};

inline void adam_step(BatParams& params, const std::vector<Tensor>& grads, AdamState& state,
                      const TrainConfig& cfg) {
    ++state.step;
    double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    std::size_t ti = 0;
    params.for_each([&](const char*, Tensor& t) {
        const Tensor& g = grads[ti];
        Tensor& m = state.m[ti];
        Tensor& v = state.v[ti];
        for (std::size_t i = 0; i < t.size(); ++i) {
            double grad = g.data[i] + cfg.weight_decay * t.data[i];
            m.data[i] = b1 * m.data[i] + (1.0 - b1) * grad;
            v.data[i] = b2 * v.data[i] + (1.0 - b2) * grad * grad;
            double mhat = m.data[i] / bc1;
            double vhat = v.data[i] / bc2;
            t.data[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
        ++ti;
    });
}

// --- dataset preparation: per-sample graph layouts ---

struct PreparedSample {
    Sample sample;
    GraphLayout layout;
};

struct PreparedData {
    std::vector<PreparedSample> train, val, test;
    std::size_t max_visits = 1;  // N used for every layout
    std::vector<std::string> drug_vocab;
};

// Drops drug codes from the input graph for tasks that predict drugs or LOS
// (they use condition/procedure features only).
inline Patient filter_patient_features(const Patient& p, const TaskSpec& task) {
    if (task.use_drug_features) return p;
    Patient out;
    out.id = p.id;
    for (const auto& v : p.visits) {
        Visit fv = v;
        fv.codes.clear();
        for (const auto& c : v.codes)
            if (c.category != CodeCategory::drug) fv.codes.push_back(c);
        out.visits.push_back(std::move(fv));
    }
    return out;
}

inline PreparedData prepare_data(const std::vector<Patient>& patients, const GlobalGraph& g,
                                 const BatModel& model, const TaskSpec& task,
                                 const TrainConfig& cfg) {
    PreparedData data;
    data.drug_vocab = drug_vocabulary(patients);
    std::vector<Sample> samples = make_samples(patients, task, data.drug_vocab);
    std::vector<int> split = split_patients(patients.size(), cfg);

    for (const auto& s : samples) data.max_visits = std::max(data.max_visits, s.prefix);

    for (auto& s : samples) {
        Patient prefix;
        const Patient filtered = filter_patient_features(patients[s.patient_index], task);
        prefix.id = filtered.id;
        prefix.visits.assign(filtered.visits.begin(),
                             filtered.visits.begin() + static_cast<std::ptrdiff_t>(s.prefix));
        bool usable = true;
        for (auto& v : prefix.visits)
            if (v.codes.empty()) usable = false;
        if (!usable) continue;  // all features filtered away; skip sample
        PatientGraph pg = compose_patient_graph(prefix, g, data.max_visits);
        PreparedSample ps{s, model.layout(pg, data.max_visits)};
        switch (split[s.patient_index]) {
            case 0: data.train.push_back(std::move(ps)); break;
            case 1: data.val.push_back(std::move(ps)); break;
            default: data.test.push_back(std::move(ps)); break;
        }
    }
    return data;
}

// --- evaluation ---

struct EvalOutputs {
    std::vector<std::vector<double>> probs;  // per sample, task-sized
    std::vector<std::vector<double>> labels;
};

inline EvalOutputs collect_outputs(const BatModel& model, const std::vector<PreparedSample>& set,
                                   std::size_t max_visits, const TaskSpec& task) {
    EvalOutputs out;
    for (const auto& ps : set) {
        Tape tape;
        ForwardResult fr = model.forward(tape, ps.layout, max_visits);
        const Tensor& z = tape.value(fr.logits);
        std::vector<double> p(z.data);
        // bce heads report sigmoids; the multi-class head reports softmax
        if (task.binary) {
            for (auto& x : p) x = 1.0 / (1.0 + std::exp(-x));
        } else {
            double mx = *std::max_element(p.begin(), p.end());
            double denom = 0.0;
            for (auto& x : p) denom += std::exp(x - mx);
            for (auto& x : p) x = std::exp(x - mx) / denom;
        }
        out.probs.push_back(std::move(p));
        out.labels.push_back(ps.sample.label);
    }
    return out;
}

// AUROC used for early stopping: plain for binary tasks, one-vs-rest macro
// for LOS, micro over label pairs for drug recommendation.
inline double monitor_auroc(const EvalOutputs& o, const TaskSpec& task) {
    if (task.kind == TaskKind::mortality || task.kind == TaskKind::readmission) {
        std::vector<double> s;
        std::vector<int> y;
        for (std::size_t i = 0; i < o.probs.size(); ++i) {
            s.push_back(o.probs[i][0]);
            y.push_back(o.labels[i][0] > 0.5 ? 1 : 0);
        }
        return auroc(s, y);
    }
    if (task.kind == TaskKind::los) {
        std::vector<std::size_t> truth;
        for (const auto& l : o.labels) truth.push_back(static_cast<std::size_t>(l[0]));
        return macro_auroc_ovr(o.probs, truth, kLosClasses);
    }
    std::vector<std::vector<int>> truth;
    for (const auto& l : o.labels) {
        std::vector<int> row;
        for (double x : l) row.push_back(x > 0.5 ? 1 : 0);
        truth.push_back(std::move(row));
    }
    return micro_auroc(o.probs, truth);
}

inline nlohmann::json metrics_report(const EvalOutputs& o, const TaskSpec& task) {
    nlohmann::json j;
    j["samples"] = o.probs.size();
    if (o.probs.empty()) return j;
    if (task.kind == TaskKind::mortality || task.kind == TaskKind::readmission) {
        std::vector<double> s;
        std::vector<int> y;
        std::vector<std::size_t> pred, truth;
        for (std::size_t i = 0; i < o.probs.size(); ++i) {
            s.push_back(o.probs[i][0]);
            y.push_back(o.labels[i][0] > 0.5 ? 1 : 0);
            pred.push_back(o.probs[i][0] >= 0.5 ? 1 : 0);
            truth.push_back(y.back());
        }
        try {
            j["auroc"] = auroc(s, y);
            j["auprc"] = average_precision(s, y);
        } catch (const DegenerateLabelsError&) {
            j["auroc"] = nullptr;
            j["auprc"] = nullptr;
        }
        j["accuracy"] = accuracy(pred, truth);
        j["f1"] = macro_f1(pred, truth, 2);
        j["cohen_kappa"] = cohen_kappa(pred, truth, 2);
    } else if (task.kind == TaskKind::los) {
        std::vector<std::size_t> pred, truth;
        for (std::size_t i = 0; i < o.probs.size(); ++i) {
            pred.push_back(static_cast<std::size_t>(
                std::max_element(o.probs[i].begin(), o.probs[i].end()) - o.probs[i].begin()));
            truth.push_back(static_cast<std::size_t>(o.labels[i][0]));
        }
        try {
            j["auroc_macro_ovr"] = macro_auroc_ovr(o.probs, truth, kLosClasses);
        } catch (const DegenerateLabelsError&) {
            j["auroc_macro_ovr"] = nullptr;
        }
        j["accuracy"] = accuracy(pred, truth);
        j["f1_macro"] = macro_f1(pred, truth, kLosClasses);
        j["cohen_kappa"] = cohen_kappa(pred, truth, kLosClasses);
    } else {
        std::vector<std::vector<int>> truth;
        for (const auto& l : o.labels) {
            std::vector<int> row;
            for (double x : l) row.push_back(x > 0.5 ? 1 : 0);
            truth.push_back(std::move(row));
        }
        try {
            j["auroc_micro"] = micro_auroc(o.probs, truth);
        } catch (const DegenerateLabelsError&) {
            j["auroc_micro"] = nullptr;
        }
        try {
            j["auroc_macro"] = macro_auroc_multilabel(o.probs, truth);
        } catch (const DegenerateLabelsError&) {
            j["auroc_macro"] = nullptr;
        }
        j["f1_example"] = multilabel_f1(o.probs, truth);
        j["jaccard_example"] = multilabel_jaccard(o.probs, truth);
    }
    return j;
}

// --- the training loop ---

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_auroc = 0.0;
};

struct TrainResult {
    BatParams best_params;
    double best_val_auroc = 0.0;
    std::size_t best_epoch = 0;
    std::vector<EpochRecord> history;
};

inline TrainResult train(BatModel& model, PreparedData& data, const TaskSpec& task,
                         const TrainConfig& cfg) {
    if (data.train.empty()) throw EmptyInputError("training set is empty");
    AdamState adam = AdamState::init_like(model.params());
    TrainResult result;
    result.best_params = model.params();
    result.best_val_auroc = -1.0;
    std::size_t since_best = 0;

    std::vector<std::size_t> order(data.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffler(cfg.seed ^ 0xba7cULL);

    std::vector<Tensor> grad_acc;
    model.params().for_each([&](const char*, const Tensor& t) { grad_acc.emplace_back(t.rows, t.cols); });

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffler.shuffle(order);
        double loss_sum = 0.0;
        std::size_t nbatches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(order.size(), start + cfg.batch_size);
            for (auto& g : grad_acc) std::fill(g.data.begin(), g.data.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t bi = start; bi < end; ++bi) {
                const PreparedSample& ps = data.train[order[bi]];
                Tape tape;
                std::vector<Var> leaves;
                ForwardResult fr = model.forward(tape, ps.layout, data.max_visits, &leaves);
                Var loss = model.loss(tape, fr.logits, task, ps.sample.label);
                tape.backward(loss);
                batch_loss += tape.value(loss).data[0];
                double scale = 1.0 / static_cast<double>(end - start);
                for (std::size_t ti = 0; ti < leaves.size(); ++ti) {
                    const Tensor& g = tape.grad(leaves[ti]);
                    for (std::size_t i = 0; i < g.size(); ++i) grad_acc[ti].data[i] += scale * g.data[i];
                }
            }
            adam_step(model.params(), grad_acc, adam, cfg);
            loss_sum += batch_loss / static_cast<double>(end - start);
            ++nbatches;
        }

        double val_auroc = 0.0;
        if (!data.val.empty()) {
            try {
                val_auroc = monitor_auroc(collect_outputs(model, data.val, data.max_visits, task), task);
            } catch (const DegenerateLabelsError&) {
                val_auroc = 0.5;
            }
        }
        result.history.push_back({epoch, loss_sum / static_cast<double>(nbatches), val_auroc});

        if (val_auroc > result.best_val_auroc) {
            result.best_val_auroc = val_auroc;
            result.best_epoch = epoch;
            result.best_params = model.params();
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return result;
}

}  // namespace mg
