#pragma once

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "medgraph/common.hpp"

namespace mg {

enum class CodeCategory { condition, procedure, drug };

inline const char* to_string(CodeCategory c) {
    switch (c) {
        case CodeCategory::condition: return "condition";
        case CodeCategory::procedure: return "procedure";
        case CodeCategory::drug: return "drug";
    }
    return "?";
}

inline CodeCategory category_from_string(std::string_view s) {
    if (s == "condition") return CodeCategory::condition;
    if (s == "procedure") return CodeCategory::procedure;
    if (s == "drug") return CodeCategory::drug;
    throw InvalidConfigError("unknown code category: " + std::string(s));
}

struct MedicalCode {
    std::string id;
    CodeCategory category = CodeCategory::condition;

    bool operator==(const MedicalCode& o) const {
        return id == o.id && category == o.category;
    }
    bool operator<(const MedicalCode& o) const {
        return std::tie(id, category) < std::tie(o.id, o.category);
    }
};

struct Triple {
    std::string head;
    std::string relation;
    std::string tail;

    bool operator==(const Triple& o) const {
        return head == o.head && relation == o.relation && tail == o.tail;
    }
    bool operator<(const Triple& o) const {
        return std::tie(head, relation, tail) < std::tie(o.head, o.relation, o.tail);
    }
};

struct ConceptKg {
    MedicalCode code;
    std::vector<Triple> triples;  // deduplicated, sorted

    void add(const Triple& t) {
        auto it = std::lower_bound(triples.begin(), triples.end(), t);
        if (it == triples.end() || !(*it == t)) triples.insert(it, t);
    }
};

struct ParseResult {
    std::vector<Triple> triples;
    std::size_t skipped = 0;
};

// Parses every bracketed [head, relation, tail] fragment out of a raw LLM
// response. Fragments with other arities are counted as skipped. Elements
// are normalized (trimmed, lowercased, inner whitespace collapsed).
inline ParseResult parse_llm_triples(std::string_view text) {
    ParseResult out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '[') {
            ++i;
            continue;
        }
        std::size_t close = text.find(']', i + 1);
        if (close == std::string_view::npos) break;
        std::string_view body = text.substr(i + 1, close - i - 1);
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (;;) {
            std::size_t comma = body.find(',', start);
            if (comma == std::string_view::npos) {
                parts.push_back(normalize_term(body.substr(start)));
                break;
            }
            parts.push_back(normalize_term(body.substr(start, comma - start)));
            start = comma + 1;
        }
        if (parts.size() == 3 && !parts[0].empty() && !parts[1].empty() && !parts[2].empty()) {
            out.triples.push_back({parts[0], parts[1], parts[2]});
        } else {
            ++out.skipped;
        }
        i = close + 1;
    }
    return out;
}

// Round-trip serialization back to the bracketed grammar.
inline std::string format_triples(const std::vector<Triple>& ts) {
    std::string out;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (i) out += ", ";
        out += "[" + ts[i].head + ", " + ts[i].relation + ", " + ts[i].tail + "]";
    }
    return out;
}

// Set-union of multi-run prompting outputs for one code.
inline ConceptKg aggregate_runs(const std::vector<std::vector<Triple>>& runs, const MedicalCode& code) {
    std::set<Triple> uniq;
    for (const auto& run : runs) uniq.insert(run.begin(), run.end());
    ConceptKg kg;
    kg.code = code;
    kg.triples.assign(uniq.begin(), uniq.end());
    return kg;
}

// --- tab-separated triple file io ---

inline void save_triples_tsv(const std::string& path, const std::vector<Triple>& ts) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    for (const auto& t : ts) f << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
}

inline std::vector<Triple> load_triples_tsv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::vector<Triple> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::size_t a = line.find('\t');
        std::size_t b = (a == std::string::npos) ? std::string::npos : line.find('\t', a + 1);
        if (b == std::string::npos) throw IoError("bad triple line: " + line);
        out.push_back({line.substr(0, a), line.substr(a + 1, b - a - 1), line.substr(b + 1)});
    }
    return out;
}

}  // namespace mg
