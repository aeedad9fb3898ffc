#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnknownEntityError : Error { using Error::Error; };
struct UnknownCodeError : Error { using Error::Error; };
struct ZeroVectorError : Error { using Error::Error; };
struct EmptyInputError : Error { using Error::Error; };
struct ShapeMismatchError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct InvalidConfigError : Error { using Error::Error; };

// splitmix64: seeds and fallback-embedding hashing both go through this.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d4a7b6a2f98e5ULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_string(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = seed ^ 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
        h = h ^ (h >> 29);
    }
    return h;
}

// Small deterministic RNG; identical streams across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ^ 0x2545f4914f6cdd1dULL) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Unbiased integer in [0, bound).
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw Error("Rng::next_below: zero bound");
        std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    double next_unit() {  // [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Box-Muller; one draw per call, spare discarded for simplicity.
    double next_gaussian();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

inline double Rng::next_gaussian() {
    // Rejection-free polar form is overkill here; classic Box-Muller.
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 < 1e-300) u1 = 1e-300;
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// lowercase + trim + collapse internal whitespace runs to single spaces
inline std::string normalize_term(std::string_view s) {
    std::string t = trim(s);
    std::string out;
    out.reserve(t.size());
    bool in_space = false;
    for (char c : t) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

// FNV-1a over file bytes; used for the run manifest.
inline std::uint64_t fnv1a_bytes(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace mg
