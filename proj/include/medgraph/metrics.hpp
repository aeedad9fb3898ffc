#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "medgraph/common.hpp"

namespace mg {

struct DegenerateLabelsError : Error { using Error::Error; };

// Rank-statistic AUROC with midrank tie handling; equals the pairwise
// P(score_pos > score_neg) + 0.5 P(tie) estimator.
inline double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw ShapeMismatchError("auroc: size mismatch");
    const std::size_t n = scores.size();
    std::size_t npos = 0;
    for (int y : labels) npos += (y != 0);
    std::size_t nneg = n - npos;
    if (npos == 0 || nneg == 0) throw DegenerateLabelsError("auroc: need both classes");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] != 0) pos_rank_sum += midrank;
        i = j;
    }
    double np = static_cast<double>(npos), nn = static_cast<double>(nneg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

// Average precision (step-wise interpolation of the PR curve), descending
// score order, tied scores processed as one group.
inline double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw ShapeMismatchError("auprc: size mismatch");
    std::size_t npos = 0;
    for (int y : labels) npos += (y != 0);
    if (npos == 0 || npos == scores.size()) throw DegenerateLabelsError("auprc: need both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    std::size_t tp = 0, seen = 0, i = 0;
    const std::size_t n = scores.size();
    while (i < n) {
        std::size_t j = i, group_tp = 0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]] != 0) ++group_tp;
            ++j;
        }
        tp += group_tp;
        seen += j - i;
        if (group_tp > 0) {
            double precision = static_cast<double>(tp) / static_cast<double>(seen);
            ap += precision * static_cast<double>(group_tp) / static_cast<double>(npos);
        }
        i = j;
    }
    return ap;
}

inline double accuracy(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth) {
    if (pred.size() != truth.size() || pred.empty()) throw ShapeMismatchError("accuracy: bad input");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += (pred[i] == truth[i]);
    return static_cast<double>(hit) / static_cast<double>(pred.size());
}

// Macro-averaged F1 over classes present in the truth.
inline double macro_f1(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth,
                       std::size_t num_classes) {
    if (pred.size() != truth.size() || pred.empty()) throw ShapeMismatchError("macro_f1: bad input");
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == c && truth[i] == c) ++tp;
            else if (pred[i] == c) ++fp;
            else if (truth[i] == c) ++fn;
        }
        if (tp + fp + fn == 0) continue;
        sum += (2.0 * tp) / static_cast<double>(2 * tp + fp + fn);
        ++used;
    }
    return used ? sum / static_cast<double>(used) : 0.0;
}

// Example-based multi-label F1 at threshold 0.5, averaged over samples.
inline double multilabel_f1(const std::vector<std::vector<double>>& probs,
                            const std::vector<std::vector<int>>& truth, double threshold = 0.5) {
    if (probs.size() != truth.size() || probs.empty()) throw ShapeMismatchError("multilabel_f1: bad input");
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t k = 0; k < probs[i].size(); ++k) {
            bool p = probs[i][k] >= threshold, t = truth[i][k] != 0;
            tp += (p && t); fp += (p && !t); fn += (!p && t);
        }
        sum += (tp + fp + fn == 0) ? 1.0 : (2.0 * tp) / static_cast<double>(2 * tp + fp + fn);
    }
    return sum / static_cast<double>(probs.size());
}

inline double multilabel_jaccard(const std::vector<std::vector<double>>& probs,
                                 const std::vector<std::vector<int>>& truth, double threshold = 0.5) {
    if (probs.size() != truth.size() || probs.empty())
        throw ShapeMismatchError("multilabel_jaccard: bad input");
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        std::size_t inter = 0, uni = 0;
        for (std::size_t k = 0; k < probs[i].size(); ++k) {
            bool p = probs[i][k] >= threshold, t = truth[i][k] != 0;
            inter += (p && t); uni += (p || t);
        }
        sum += (uni == 0) ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    return sum / static_cast<double>(probs.size());
}

inline double cohen_kappa(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth,
                          std::size_t num_classes) {
    if (pred.size() != truth.size() || pred.empty()) throw ShapeMismatchError("kappa: bad input");
    std::vector<double> conf(num_classes * num_classes, 0.0);
    for (std::size_t i = 0; i < pred.size(); ++i) conf[truth[i] * num_classes + pred[i]] += 1.0;
    double n = static_cast<double>(pred.size());
    double diag = 0.0, pe = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        diag += conf[c * num_classes + c];
        double row = 0.0, col = 0.0;
        for (std::size_t k = 0; k < num_classes; ++k) {
            row += conf[c * num_classes + k];
            col += conf[k * num_classes + c];
        }
        pe += (row / n) * (col / n);
    }
    double po = diag / n;  // single division keeps perfect agreement at exactly 1
    if (pe >= 1.0) return po >= 1.0 ? 1.0 : 0.0;  // all mass in one class
    return (po - pe) / (1.0 - pe);
}

// One-vs-rest macro AUROC over classes with both outcomes present.
inline double macro_auroc_ovr(const std::vector<std::vector<double>>& probs,
                              const std::vector<std::size_t>& truth, std::size_t num_classes) {
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::vector<double> s;
        std::vector<int> y;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            s.push_back(probs[i][c]);
            y.push_back(truth[i] == c ? 1 : 0);
        }
        try {
            sum += auroc(s, y);
            ++used;
        } catch (const DegenerateLabelsError&) {
        }
    }
    if (used == 0) throw DegenerateLabelsError("macro_auroc_ovr: no usable class");
    return sum / static_cast<double>(used);
}

// Micro AUROC over all (sample, label) pairs of a multi-label problem.
inline double micro_auroc(const std::vector<std::vector<double>>& probs,
                          const std::vector<std::vector<int>>& truth) {
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t i = 0; i < probs.size(); ++i)
        for (std::size_t k = 0; k < probs[i].size(); ++k) {
            s.push_back(probs[i][k]);
            y.push_back(truth[i][k]);
        }
    return auroc(s, y);
}

// Macro AUROC over labels of a multi-label problem (degenerate labels skipped).
inline double macro_auroc_multilabel(const std::vector<std::vector<double>>& probs,
                                     const std::vector<std::vector<int>>& truth) {
    if (probs.empty()) throw ShapeMismatchError("macro_auroc: empty");
    std::size_t k_count = probs[0].size();
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < k_count; ++k) {
        std::vector<double> s;
        std::vector<int> y;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            s.push_back(probs[i][k]);
            y.push_back(truth[i][k]);
        }
        try {
            sum += auroc(s, y);
            ++used;
        } catch (const DegenerateLabelsError&) {
        }
    }
    if (used == 0) throw DegenerateLabelsError("macro_auroc: no usable label");
    return sum / static_cast<double>(used);
}

}  // namespace mg
