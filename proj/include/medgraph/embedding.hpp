#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "medgraph/common.hpp"

namespace mg {

inline double dot(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) throw ShapeMismatchError("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

inline double norm2(const std::vector<double>& u) { return std::sqrt(dot(u, u)); }

inline double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v) {
    double nu = norm2(u), nv = norm2(v);
    if (nu == 0.0 || nv == 0.0) throw ZeroVectorError("cosine_similarity: zero vector");
    return dot(u, v) / (nu * nv);
}

// Word-embedding table with a deterministic unit-norm fallback for strings
// that were never embedded, so offline runs always have vectors.
class EmbeddingProvider {
public:
    explicit EmbeddingProvider(std::size_t dim = 1536, std::uint64_t fallback_seed = 0)
        : dim_(dim), seed_(fallback_seed) {}

    std::size_t dim() const { return dim_; }

    void put(const std::string& s, std::vector<double> v) {
        if (v.size() != dim_) throw ShapeMismatchError("embedding dim mismatch for: " + s);
        table_[s] = std::move(v);
    }

    bool has(const std::string& s) const { return table_.count(s) != 0; }

    std::vector<double> get(const std::string& s) const {
        auto it = table_.find(s);
        if (it != table_.end()) return it->second;
        return fallback(s);
    }

    std::vector<double> fallback(const std::string& s) const {
        Rng rng(hash_string(s, seed_));
        std::vector<double> v(dim_);
        double ss = 0.0;
        for (auto& x : v) {
            x = rng.next_gaussian();
            ss += x * x;
        }
        double inv = 1.0 / std::sqrt(ss);
        for (auto& x : v) x *= inv;
        return v;
    }

    // Format: first line the dimension, then "string\tf64,f64,..." lines.
    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot open for write: " + path);
        f.precision(17);
        f << dim_ << '\n';
        for (const auto& [k, v] : table_) {
            f << k << '\t';
            for (std::size_t i = 0; i < v.size(); ++i) f << (i ? "," : "") << v[i];
            f << '\n';
        }
    }

    static EmbeddingProvider load(const std::string& path, std::uint64_t fallback_seed = 0) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot open: " + path);
        std::string line;
        if (!std::getline(f, line)) throw IoError("empty embedding file: " + path);
        EmbeddingProvider p(static_cast<std::size_t>(std::stoull(line)), fallback_seed);
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            std::size_t tab = line.find('\t');
            if (tab == std::string::npos) throw IoError("bad embedding line: " + line);
            std::vector<double> v;
            v.reserve(p.dim());
            std::stringstream ss(line.substr(tab + 1));
            std::string tok;
            while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
            p.put(line.substr(0, tab), std::move(v));
        }
        return p;
    }

private:
    std::size_t dim_;
    std::uint64_t seed_;
    std::unordered_map<std::string, std::vector<double>> table_;
};

}  // namespace mg
