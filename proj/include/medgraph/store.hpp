#pragma once

#include <queue>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "medgraph/triples.hpp"

namespace mg {

// Read-only after construction; incidence is indexed on both endpoints.
class TripleStore {
public:
    TripleStore() = default;
    explicit TripleStore(std::vector<Triple> triples) : triples_(std::move(triples)) {
        for (std::size_t i = 0; i < triples_.size(); ++i) {
            index_[triples_[i].head].push_back(i);
            if (triples_[i].tail != triples_[i].head) index_[triples_[i].tail].push_back(i);
            else index_[triples_[i].head].push_back(i);  // self-loop: twice
        }
    }

    const std::vector<Triple>& triples() const { return triples_; }
    std::size_t size() const { return triples_.size(); }

    bool contains_entity(const std::string& e) const { return index_.count(e) != 0; }

    const std::vector<std::size_t>& incident(const std::string& e) const {
        static const std::vector<std::size_t> kEmpty;
        auto it = index_.find(e);
        return it == index_.end() ? kEmpty : it->second;
    }

private:
    std::vector<Triple> triples_;
    std::unordered_map<std::string, std::vector<std::size_t>> index_;
};

// Hop-limited subgraph extraction around a code's entity name. The first hop
// takes every incident triple; later hops draw at most `epsilon` incident
// triples per frontier entity, uniformly without replacement. Entities seen
// once are never re-expanded.
inline ConceptKg sample_subgraph(const MedicalCode& code, const TripleStore& store,
                                 std::size_t kappa, std::size_t epsilon, std::uint64_t seed) {
    const std::string entity = normalize_term(code.id);
    if (!store.contains_entity(entity)) {
        throw UnknownEntityError("entity not in store: " + entity);
    }
    if (kappa < 1 || epsilon < 1) throw InvalidConfigError("kappa and epsilon must be >= 1");

    Rng rng(seed);
    ConceptKg kg;
    kg.code = code;

    std::unordered_set<std::string> visited{entity};
    std::unordered_set<std::size_t> taken;
    std::vector<std::string> frontier{entity};

    for (std::size_t hop = 1; hop <= kappa && !frontier.empty(); ++hop) {
        std::vector<std::string> next;
        for (const auto& ent : frontier) {
            const auto& inc = store.incident(ent);
            std::vector<std::size_t> picked;
            if (hop == 1) {
                picked.assign(inc.begin(), inc.end());
            } else {
                picked.assign(inc.begin(), inc.end());
                // partial Fisher-Yates: first min(eps, n) slots
                std::size_t take = std::min<std::size_t>(epsilon, picked.size());
                for (std::size_t i = 0; i < take; ++i) {
                    std::size_t j = i + static_cast<std::size_t>(rng.next_below(picked.size() - i));
                    std::swap(picked[i], picked[j]);
                }
                picked.resize(take);
            }
            for (std::size_t tid : picked) {
                const Triple& t = store.triples()[tid];
                if (taken.insert(tid).second) kg.add(t);
                for (const std::string* other : {&t.head, &t.tail}) {
                    if (visited.insert(*other).second) next.push_back(*other);
                }
            }
        }
        frontier = std::move(next);
    }
    return kg;
}

}  // namespace mg
