#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "medgraph/patient.hpp"
#include "medgraph/tensor.hpp"

namespace mg {

enum class ReadoutMode { graph, node, joint };
enum class TaskKind { mortality, readmission, los, drugrec };

inline const char* to_string(ReadoutMode m) {
    switch (m) {
        case ReadoutMode::graph: return "graph";
        case ReadoutMode::node: return "node";
        case ReadoutMode::joint: return "joint";
    }
    return "?";
}
inline ReadoutMode readout_from_string(std::string_view s) {
    if (s == "graph") return ReadoutMode::graph;
    if (s == "node") return ReadoutMode::node;
    if (s == "joint") return ReadoutMode::joint;
    throw InvalidConfigError("unknown readout mode: " + std::string(s));
}

inline const char* to_string(TaskKind t) {
    switch (t) {
        case TaskKind::mortality: return "mortality";
        case TaskKind::readmission: return "readmission";
        case TaskKind::los: return "los";
        case TaskKind::drugrec: return "drugrec";
    }
    return "?";
}
inline TaskKind task_from_string(std::string_view s) {
    if (s == "mortality") return TaskKind::mortality;
    if (s == "readmission") return TaskKind::readmission;
    if (s == "los") return TaskKind::los;
    if (s == "drugrec") return TaskKind::drugrec;
    throw InvalidConfigError("unknown task: " + std::string(s));
}

constexpr std::size_t kLosClasses = 10;
constexpr double kReadmissionWindowDays = 15.0;

struct TaskSpec {
    TaskKind kind = TaskKind::mortality;
    std::size_t output_size = 1;
    bool binary = true;              // bce heads; false -> softmax ce
    std::string task_term = "death"; // attention-init query term
    bool use_drug_features = true;   // drug codes in the input graph

    static TaskSpec make(TaskKind kind, std::size_t drug_vocab_size = 0) {
        TaskSpec t;
        t.kind = kind;
        switch (kind) {
            case TaskKind::mortality:
                t = {kind, 1, true, "death", true};
                break;
            case TaskKind::readmission:
                t = {kind, 1, true, "readmission", true};
                break;
            case TaskKind::los:
                t = {kind, kLosClasses, false, "length of stay", false};
                break;
            case TaskKind::drugrec:
                if (drug_vocab_size == 0) throw InvalidConfigError("drugrec needs a drug vocabulary");
                t = {kind, drug_vocab_size, true, "drug", false};
                break;
        }
        return t;
    }
};

inline std::size_t los_class_of(double los_days) {
    if (los_days < 1.0) return 0;
    if (los_days <= 7.0) return static_cast<std::size_t>(std::ceil(los_days));
    if (los_days <= 14.0) return 8;
    return 9;
}

struct ModelConfig {
    ReadoutMode mode = ReadoutMode::joint;
    bool use_node_attention = true;
    bool use_visit_attention = true;
    bool use_edge_weights = true;
    std::size_t hidden_dim = 128;  // q
    std::size_t layers = 1;        // L
    double gamma = 0.01;           // visit decay rate
};

// lambda_j = exp(-gamma (J - j)) for 1 <= j <= J, zero for padded visits.
inline std::vector<double> decay_coefficients(std::size_t J, std::size_t N, double gamma) {
    if (J < 1 || J > N) throw InvalidConfigError("decay_coefficients: need 1 <= J <= N");
    if (gamma < 0) throw InvalidConfigError("decay_coefficients: gamma must be >= 0");
    std::vector<double> lambda(N, 0.0);
    for (std::size_t j = 1; j <= J; ++j)
        lambda[j - 1] = std::exp(-gamma * static_cast<double>(J - j));
    return lambda;
}

// Diagonal attention seed: cosine of each node embedding against the task
// term embedding, min-max normalized into [0, 1]. A degenerate range (all
// cosines equal) collapses to all-ones.
inline std::vector<double> init_node_attention(const std::vector<std::vector<double>>& node_emb,
                                               const std::vector<double>& task_term_emb) {
    if (node_emb.empty()) throw EmptyInputError("init_node_attention: no nodes");
    std::vector<double> w(node_emb.size());
    for (std::size_t m = 0; m < node_emb.size(); ++m)
        w[m] = cosine_similarity(node_emb[m], task_term_emb);
    double lo = *std::min_element(w.begin(), w.end());
    double hi = *std::max_element(w.begin(), w.end());
    if (hi - lo < 1e-15) {
        std::fill(w.begin(), w.end(), 1.0);
    } else {
        for (auto& x : w) x = (x - lo) / (hi - lo);
    }
    return w;
}

struct BatParams {
    std::size_t w = 0;        // input embedding width
    std::size_t q = 0;        // hidden width
    std::size_t M = 0;        // global node count
    std::size_t N = 0;        // max visits (capacity)
    std::size_t E = 0;        // edge types including the reserved patient type
    std::size_t L = 0;        // conv layers
    std::size_t head_in = 0;  // q or 2q for joint
    std::size_t out = 0;      // task output size

    Tensor Wv, bv;      // w x q, 1 x q
    Tensor Wr, br;      // w x q, 1 x q
    Tensor Walpha;      // M x M
    Tensor balpha;      // 1 x M
    Tensor wbeta;       // M x 1
    Tensor bbeta;       // N x 1
    std::vector<Tensor> Wl, bl;  // per layer: q x q, 1 x q
    std::vector<Tensor> wR;      // per layer: E x 1
    Tensor head_W1, head_b1;     // head_in x q, 1 x q
    Tensor head_W2, head_b2;     // q x out, 1 x out

    template <typename F>
    void for_each(F&& f) {
        f("Wv", Wv); f("bv", bv);
        f("Wr", Wr); f("br", br);
        f("Walpha", Walpha); f("balpha", balpha);
        f("wbeta", wbeta); f("bbeta", bbeta);
        for (std::size_t l = 0; l < L; ++l) {
            std::string tag = std::to_string(l);
            f(("Wl" + tag).c_str(), Wl[l]);
            f(("bl" + tag).c_str(), bl[l]);
            f(("wR" + tag).c_str(), wR[l]);
        }
        f("head_W1", head_W1); f("head_b1", head_b1);
        f("head_W2", head_W2); f("head_b2", head_b2);
    }
    template <typename F>
    void for_each(F&& f) const { const_cast<BatParams*>(this)->for_each(std::forward<F>(f)); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for_each([&](const char*, const Tensor& t) { n += t.size(); });
        return n;
    }

    static BatParams init(std::size_t w, std::size_t q, std::size_t M, std::size_t N, std::size_t E,
                          std::size_t L, ReadoutMode mode, std::size_t out, std::uint64_t seed) {
        BatParams p;
        p.w = w; p.q = q; p.M = M; p.N = N; p.E = E; p.L = L; p.out = out;
        p.head_in = (mode == ReadoutMode::joint) ? 2 * q : q;
        Rng rng(seed);
        auto gauss = [&](std::size_t r, std::size_t c, double scale) {
            Tensor t(r, c);
            for (auto& x : t.data) x = rng.next_gaussian() * scale;
            return t;
        };
        double sw = 1.0 / std::sqrt(static_cast<double>(w));
        double sq = 1.0 / std::sqrt(static_cast<double>(q));
        p.Wv = gauss(w, q, sw);
        p.bv = Tensor(1, q);
        p.Wr = gauss(w, q, sw);
        p.br = Tensor(1, q);
        p.Walpha = Tensor(M, M);
        for (std::size_t m = 0; m < M; ++m) p.Walpha.at(m, m) = 1.0;
        p.balpha = Tensor(1, M);
        p.wbeta = gauss(M, 1, 1.0 / std::sqrt(static_cast<double>(M)));
        p.bbeta = Tensor(N, 1);
        for (std::size_t l = 0; l < L; ++l) {
            p.Wl.push_back(gauss(q, q, sq));
            p.bl.push_back(Tensor(1, q));
            p.wR.push_back(Tensor(E, 1, 1.0));  // neutral edge weights
        }
        p.head_W1 = gauss(p.head_in, q, 1.0 / std::sqrt(static_cast<double>(p.head_in)));
        p.head_b1 = Tensor(1, q);
        p.head_W2 = gauss(q, out, sq);
        p.head_b2 = Tensor(1, out);
        return p;
    }

    void apply_attention_init(const std::vector<std::vector<double>>& node_emb,
                              const std::vector<double>& task_term_emb) {
        auto wts = init_node_attention(node_emb, task_term_emb);
        if (wts.size() != M) throw ShapeMismatchError("attention init: node count != M");
        Walpha = Tensor(M, M);
        for (std::size_t m = 0; m < M; ++m) Walpha.at(m, m) = wts[m];
        balpha = Tensor(1, M);
    }
};

// One node occurrence (visit, node) in a patient's graph. Node == M means
// the patient node.
struct Instance {
    std::size_t visit = 0;
    std::size_t node = 0;
};

// Everything the forward pass leaves behind that training and the
// interpreter need: the logits variable plus concrete attention values.
struct ForwardResult {
    Var logits;                     // 1 x out
    std::vector<Instance> instances;
    Tensor alpha;                   // N x (M+1); column M is the patient node
    Tensor beta;                    // N x 1
    std::vector<double> lambda;
};

// Static, parameter-independent description of one sample's graph; built
// once and reused across epochs.
struct GraphLayout {
    std::size_t J = 0;  // visits in this sample
    std::vector<Instance> instances;
    std::vector<std::size_t> unique_nodes;   // global ids; patient node last if present
    std::vector<std::size_t> unique_types;   // edge types used
    Tensor node_inputs;                      // |un| x w constants
    Tensor type_inputs;                      // |ut| x w (reserved type row = 0)
    Tensor select;                           // inst x |un| picks each instance's node row
    Tensor agg_mask;                         // inst x inst BAT neighborhood mask
    Tensor type_counts;                      // inst x |ut| edge-type multiplicities
    Tensor multi_hot;                        // N x M
    Tensor alpha_mask;                       // N x M
    Tensor direct_selector;                  // 1 x inst mean over direct-code instances
    Tensor mean_selector;                    // 1 x inst mean over all instances
    Tensor uniform_alpha;                    // N x (M+1) for the attention-off toggle
    std::vector<std::pair<std::size_t, std::size_t>> alpha_coords;  // (visit, col) per instance
    std::vector<std::pair<std::size_t, std::size_t>> beta_coords;   // (visit, 0) per instance
    bool has_direct = false;
};

// The BAT network. Holds parameters plus the global-graph constants it
// needs (input embeddings); forward() builds a fresh tape graph per call.
class BatModel {
public:
    BatModel(BatParams params, ModelConfig config, const GlobalGraph& g)
        : params_(std::move(params)), config_(config), graph_(&g) {
        if (params_.M != g.node_count()) throw ShapeMismatchError("params M != global node count");
        if (params_.E != g.edge_type_count() + 1) throw ShapeMismatchError("params E != |C_E|+1");
    }

    BatParams& params() { return params_; }
    const BatParams& params() const { return params_; }
    const ModelConfig& config() const { return config_; }
    const GlobalGraph& graph() const { return *graph_; }

    GraphLayout layout(const PatientGraph& pg, std::size_t max_visits) const {
        if (max_visits > params_.N) throw InvalidConfigError("max_visits exceeds parameter capacity N");
        const std::size_t M = params_.M;
        GraphLayout lo;
        lo.J = pg.visit_count;

        std::map<std::size_t, std::size_t> node_slot;
        for (std::size_t j = 0; j < pg.visit_count; ++j) {
            for (std::size_t m : pg.visit_nodes[j]) {
                lo.instances.push_back({j, m});
                node_slot.emplace(m, 0);
            }
        }
        if (lo.instances.empty()) throw EmptyInputError("patient graph has no node instances");
        std::size_t slot = 0;
        for (auto& [node, s] : node_slot) s = slot++;
        lo.unique_nodes.resize(node_slot.size());
        for (auto& [node, s] : node_slot) lo.unique_nodes[s] = node;

        std::map<std::size_t, std::size_t> type_slot;
        for (const auto& evec : pg.visit_edges)
            for (const auto& e : evec) type_slot.emplace(e.type, 0);
        slot = 0;
        for (auto& [tp, s] : type_slot) s = slot++;
        lo.unique_types.resize(type_slot.size());
        for (auto& [tp, s] : type_slot) lo.unique_types[s] = tp;

        // input embeddings
        lo.node_inputs = Tensor(lo.unique_nodes.size(), params_.w);
        std::vector<double> patient_emb;
        for (std::size_t s = 0; s < lo.unique_nodes.size(); ++s) {
            std::size_t m = lo.unique_nodes[s];
            const std::vector<double>* src;
            if (m < M) {
                src = &graph_->node_emb[m];
            } else {
                patient_emb = patient_node_init_embedding(pg, *graph_);
                src = &patient_emb;
            }
            for (std::size_t k = 0; k < params_.w; ++k) lo.node_inputs.at(s, k) = (*src)[k];
        }
        lo.type_inputs = Tensor(lo.unique_types.size(), params_.w);
        for (std::size_t s = 0; s < lo.unique_types.size(); ++s) {
            std::size_t tp = lo.unique_types[s];
            if (tp < graph_->edge_type_count())  // reserved type keeps a zero row
                for (std::size_t k = 0; k < params_.w; ++k)
                    lo.type_inputs.at(s, k) = graph_->edge_emb[tp][k];
        }

        const std::size_t ni = lo.instances.size();
        lo.select = Tensor(ni, lo.unique_nodes.size());
        for (std::size_t t = 0; t < ni; ++t) lo.select.at(t, node_slot[lo.instances[t].node]) = 1.0;

        // Aggregation neighborhood: the self node across every visit where it
        // appears, plus symmetrized same-visit neighbors. Edge-type counts
        // feed the edge aggregation term.
        std::vector<std::map<std::size_t, std::size_t>> inst_of(pg.visit_count);
        for (std::size_t t = 0; t < ni; ++t) inst_of[lo.instances[t].visit][lo.instances[t].node] = t;
        lo.agg_mask = Tensor(ni, ni);
        lo.type_counts = Tensor(ni, lo.unique_types.size());
        for (std::size_t t = 0; t < ni; ++t) {
            std::size_t k = lo.instances[t].node;
            for (std::size_t j2 = 0; j2 < pg.visit_count; ++j2) {
                auto self_it = inst_of[j2].find(k);
                if (self_it != inst_of[j2].end()) lo.agg_mask.at(t, self_it->second) = 1.0;
                for (const auto& e : pg.visit_edges[j2]) {
                    std::size_t other;
                    if (e.a == k) other = e.b;
                    else if (e.b == k) other = e.a;
                    else continue;
                    if (other == k) continue;  // explicit self-loops handled as edges below
                    auto it = inst_of[j2].find(other);
                    if (it == inst_of[j2].end()) continue;
                    lo.agg_mask.at(t, it->second) = 1.0;
                    lo.type_counts.at(t, type_slot[e.type]) += 1.0;
                }
                // A self-loop edge contributes its edge embedding to k.
                for (const auto& e : pg.visit_edges[j2])
                    if (e.a == k && e.b == k) lo.type_counts.at(t, type_slot[e.type]) += 1.0;
            }
        }

        lo.multi_hot = Tensor(max_visits, M);
        lo.alpha_mask = Tensor(max_visits, M);
        for (std::size_t j = 0; j < pg.visit_count; ++j)
            for (std::size_t m : pg.visit_nodes[j])
                if (m < M) lo.multi_hot.at(j, m) = lo.alpha_mask.at(j, m) = 1.0;

        lo.uniform_alpha = Tensor(max_visits, M + 1);
        for (std::size_t j = 0; j < pg.visit_count; ++j) {
            double u = 1.0 / static_cast<double>(pg.visit_nodes[j].size());
            for (std::size_t m : pg.visit_nodes[j]) lo.uniform_alpha.at(j, std::min(m, M)) = u;
        }

        lo.alpha_coords.reserve(ni);
        lo.beta_coords.reserve(ni);
        for (const auto& inst : lo.instances) {
            lo.alpha_coords.emplace_back(inst.visit, std::min(inst.node, M));
            lo.beta_coords.emplace_back(inst.visit, 0);
        }

        lo.mean_selector = Tensor(1, ni, 1.0 / static_cast<double>(ni));
        lo.direct_selector = Tensor(1, ni);
        std::size_t nd = 0;
        for (std::size_t t = 0; t < ni; ++t)
            if (lo.instances[t].node < M && pg.is_direct(lo.instances[t].node)) ++nd;
        if (nd > 0) {
            lo.has_direct = true;
            for (std::size_t t = 0; t < ni; ++t)
                if (lo.instances[t].node < M && pg.is_direct(lo.instances[t].node))
                    lo.direct_selector.at(0, t) = 1.0 / static_cast<double>(nd);
        }
        return lo;
    }

    // Forward pass for one sample. `leaves` receives a tape Var per parameter
    // tensor, in for_each order, so callers can read gradients back out.
    ForwardResult forward(Tape& tape, const GraphLayout& lo, std::size_t max_visits,
                          std::vector<Var>* leaves_out = nullptr) const {
        const std::size_t M = params_.M;
        const std::size_t ni = lo.instances.size();

        std::vector<Var> leaves;
        std::map<std::string, Var> var_of;
        params_.for_each([&](const char* name, const Tensor& t) {
            Var v = tape.leaf(t);
            leaves.push_back(v);
            var_of[name] = v;
        });
        if (leaves_out) *leaves_out = leaves;

        // Eq-style reduction of input embeddings to hidden width.
        Var Xv = tape.constant(lo.node_inputs);
        Var Hh = tape.add(tape.matmul(Xv, var_of["Wv"]), var_of["bv"]);
        Var Xr = tape.constant(lo.type_inputs);
        Var Hr = tape.add(tape.matmul(Xr, var_of["Wr"]), var_of["br"]);

        // attention
        std::vector<double> lambda = decay_coefficients(lo.J, max_visits, config_.gamma);
        Tensor lambda_col(max_visits, 1, lambda);

        Var alpha_ext;  // max_visits x (M+1)
        if (config_.use_node_attention) {
            Var Gi = tape.constant(lo.multi_hot);
            Var pre = tape.add(tape.matmul(Gi, var_of["Walpha"]), var_of["balpha"]);
            Var alpha = tape.masked_row_softmax(pre, lo.alpha_mask);
            // The patient node sits outside the softmax vocabulary and
            // carries weight 1 in every visit it appears in (all of them).
            Tensor pcol(max_visits, 1);
            for (std::size_t j = 0; j < lo.J; ++j) pcol.at(j, 0) = 1.0;
            alpha_ext = tape.concat_cols(alpha, tape.constant(pcol));
        } else {
            alpha_ext = tape.constant(lo.uniform_alpha);
        }

        Var beta;  // max_visits x 1
        if (config_.use_visit_attention) {
            Var Gi = tape.constant(lo.multi_hot);
            Var bb = tape.gather(var_of["bbeta"], first_rows(max_visits));
            Var pre = tape.add(tape.matmul(Gi, var_of["wbeta"]), bb);
            beta = tape.mul_elementwise(tape.tanh_(pre), tape.constant(lambda_col));
        } else {
            beta = tape.constant(lambda_col);
        }

        // per-instance scale alpha * beta
        Var a_col = tape.gather(alpha_ext, lo.alpha_coords);
        Var b_col = tape.gather(beta, lo.beta_coords);
        Var s_col = tape.mul_elementwise(a_col, b_col);

        Var Mask = tape.constant(lo.agg_mask);
        Var TypeCounts = tape.constant(lo.type_counts);
        Var Sel = tape.constant(lo.select);
        Var H = tape.matmul(Sel, Hh);  // ni x q

        std::vector<std::pair<std::size_t, std::size_t>> type_rows;
        for (std::size_t s = 0; s < lo.unique_types.size(); ++s) type_rows.emplace_back(lo.unique_types[s], 0);

        for (std::size_t l = 0; l < params_.L; ++l) {
            Var node_term = tape.matmul(Mask, tape.row_scale(H, s_col));
            Var agg = node_term;
            if (!lo.unique_types.empty()) {
                Var wR_used;
                if (config_.use_edge_weights) {
                    std::string tag = "wR" + std::to_string(l);
                    wR_used = tape.gather(var_of[tag], type_rows);
                } else {
                    wR_used = tape.constant(Tensor(lo.unique_types.size(), 1, 1.0));
                }
                Var edge_term = tape.matmul(TypeCounts, tape.row_scale(Hr, wR_used));
                agg = tape.add(node_term, edge_term);
            }
            std::string tag = std::to_string(l);
            H = tape.relu(tape.add(tape.matmul(agg, var_of["Wl" + tag]), var_of["bl" + tag]));
        }

        // readout
        Var hG = tape.matmul(tape.constant(lo.mean_selector), H);
        Var head_in;
        if (config_.mode == ReadoutMode::graph) {
            head_in = hG;
        } else {
            if (!lo.has_direct) throw EmptyInputError("readout: direct-code set is empty");
            Var hP = tape.matmul(tape.constant(lo.direct_selector), H);
            head_in = (config_.mode == ReadoutMode::node) ? hP : tape.concat_cols(hG, hP);
        }
        Var hidden = tape.relu(tape.add(tape.matmul(head_in, var_of["head_W1"]), var_of["head_b1"]));
        Var logits = tape.add(tape.matmul(hidden, var_of["head_W2"]), var_of["head_b2"]);

        ForwardResult out;
        out.logits = logits;
        out.instances = lo.instances;
        out.alpha = tape.value(alpha_ext);
        out.beta = tape.value(beta);
        out.lambda = std::move(lambda);
        (void)ni; (void)M;
        return out;
    }

    // Task loss on top of logits. `label` is a scalar (binary), a class index
    // (multi-class), or a multi-hot vector (multi-label).
    Var loss(Tape& tape, Var logits, const TaskSpec& task, const std::vector<double>& label) const {
        // copy the width: growing the tape below invalidates value() references
        const std::size_t zcols = tape.value(logits).cols;
        if (task.binary) {
            if (label.size() != zcols) throw ShapeMismatchError("loss: label width != logits width");
            Var y = tape.constant(Tensor::row(std::vector<double>(label)));
            Var p = tape.sigmoid(logits);
            Var one = tape.constant(Tensor(1, zcols, 1.0));
            Var term_pos = tape.mul_elementwise(y, tape.log_(p));
            Var term_neg = tape.mul_elementwise(tape.sub(one, y), tape.log_(tape.sub(one, p)));
            return tape.scale(tape.mean_all(tape.add(term_pos, term_neg)), -1.0);
        }
        if (label.size() != 1) throw ShapeMismatchError("loss: multi-class label is one index");
        std::size_t cls = static_cast<std::size_t>(label[0]);
        if (cls >= zcols) throw Error("loss: class label out of range");
        Var probs = tape.softmax_rows(logits);
        return tape.scale(tape.log_(tape.at(probs, 0, cls)), -1.0);
    }

private:
    static std::vector<std::pair<std::size_t, std::size_t>> first_rows(std::size_t n) {
        std::vector<std::pair<std::size_t, std::size_t>> v;
        v.reserve(n);
        for (std::size_t i = 0; i < n; ++i) v.emplace_back(i, 0);
        return v;
    }

    BatParams params_;
    ModelConfig config_;
    const GlobalGraph* graph_;
};

// --- checkpoint io: JSON header, then raw little-endian f64 blocks in
// for_each declaration order ---

inline void save_checkpoint(const std::string& path, const BatParams& p, const ModelConfig& cfg,
                            const TaskSpec& task, std::uint64_t seed,
                            const nlohmann::json& extra = {}) {
    nlohmann::json hdr;
    hdr["version"] = 1;
    hdr["seed"] = seed;
    hdr["task"] = to_string(task.kind);
    hdr["output_size"] = task.output_size;
    hdr["mode"] = to_string(cfg.mode);
    hdr["use_node_attention"] = cfg.use_node_attention;
    hdr["use_visit_attention"] = cfg.use_visit_attention;
    hdr["use_edge_weights"] = cfg.use_edge_weights;
    hdr["hidden_dim"] = cfg.hidden_dim;
    hdr["layers"] = cfg.layers;
    hdr["gamma"] = cfg.gamma;
    hdr["w"] = p.w; hdr["q"] = p.q; hdr["M"] = p.M; hdr["N"] = p.N; hdr["E"] = p.E;
    hdr["L"] = p.L; hdr["head_in"] = p.head_in; hdr["out"] = p.out;
    auto& shapes = hdr["tensors"] = nlohmann::json::array();
    p.for_each([&](const char* name, const Tensor& t) {
        shapes.push_back({{"name", name}, {"rows", t.rows}, {"cols", t.cols}});
    });
    if (!extra.is_null() && !extra.empty()) hdr["extra"] = extra;

    std::string hs = hdr.dump();
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open for write: " + path);
    std::uint64_t len = hs.size();
    std::fwrite(&len, sizeof(len), 1, f);
    std::fwrite(hs.data(), 1, hs.size(), f);
    p.for_each([&](const char*, const Tensor& t) {
        if (std::fwrite(t.data.data(), sizeof(double), t.size(), f) != t.size()) {
            std::fclose(f);
            throw IoError("short write: " + path);
        }
    });
    std::fclose(f);
}

struct Checkpoint {
    BatParams params;
    ModelConfig config;
    TaskKind task = TaskKind::mortality;
    std::size_t output_size = 1;
    std::uint64_t seed = 0;
    nlohmann::json extra;
};

inline Checkpoint load_checkpoint(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open: " + path);
    std::uint64_t len = 0;
    if (std::fread(&len, sizeof(len), 1, f) != 1) { std::fclose(f); throw IoError("truncated: " + path); }
    std::string hs(len, '\0');
    if (std::fread(hs.data(), 1, len, f) != len) { std::fclose(f); throw IoError("truncated: " + path); }
    nlohmann::json hdr = nlohmann::json::parse(hs);

    Checkpoint ck;
    ck.seed = hdr.at("seed").get<std::uint64_t>();
    ck.task = task_from_string(hdr.at("task").get<std::string>());
    ck.output_size = hdr.at("output_size").get<std::size_t>();
    ck.config.mode = readout_from_string(hdr.at("mode").get<std::string>());
    ck.config.use_node_attention = hdr.at("use_node_attention").get<bool>();
    ck.config.use_visit_attention = hdr.at("use_visit_attention").get<bool>();
    ck.config.use_edge_weights = hdr.at("use_edge_weights").get<bool>();
    ck.config.hidden_dim = hdr.at("hidden_dim").get<std::size_t>();
    ck.config.layers = hdr.at("layers").get<std::size_t>();
    ck.config.gamma = hdr.at("gamma").get<double>();
    if (hdr.contains("extra")) ck.extra = hdr["extra"];

    BatParams& p = ck.params;
    p.w = hdr.at("w"); p.q = hdr.at("q"); p.M = hdr.at("M"); p.N = hdr.at("N");
    p.E = hdr.at("E"); p.L = hdr.at("L"); p.head_in = hdr.at("head_in"); p.out = hdr.at("out");
    p.Wl.resize(p.L); p.bl.resize(p.L); p.wR.resize(p.L);
    std::size_t idx = 0;
    const auto& shapes = hdr.at("tensors");
    p.for_each([&](const char* name, Tensor& t) {
        const auto& s = shapes.at(idx++);
        if (s.at("name").get<std::string>() != name) throw IoError("checkpoint tensor order mismatch");
        t = Tensor(s.at("rows").get<std::size_t>(), s.at("cols").get<std::size_t>());
        if (std::fread(t.data.data(), sizeof(double), t.size(), f) != t.size())
            throw IoError("truncated tensor block: " + path);
    });
    std::fclose(f);
    return ck;
}

}  // namespace mg
