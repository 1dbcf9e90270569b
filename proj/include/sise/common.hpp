#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sise {

using Vec = std::vector<double>;

/// All LLRs in the system are clamped to this magnitude before they enter
/// any estimator, tanh() or trellis recursion.
inline constexpr double kLlrClip = 50.0;

inline double clip_llr(double l) { return std::clamp(l, -kLlrClip, kLlrClip); }

inline void clip_llr(Vec& llr) {
    for (double& l : llr) l = clip_llr(l);
}

/// Jacobian logarithm, exact: ln(e^a + e^b) = max(a,b) + log1p(e^-|a-b|).
/// The correction term is below double resolution for |a-b| > 50 and is
/// skipped there.
inline double maxstar(double a, double b) {
    double hi = std::max(a, b);
    double d = std::abs(a - b);
    if (d > 50.0) return hi;
    return hi + std::log1p(std::exp(-d));
}

inline double q_func(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Named sub-streams derived from one experiment root seed, so each random
/// component (payload bits, channel noise, interleaver, channel estimation
/// error) is reproducible in isolation and shared across paired runs.
enum class Stream : std::uint64_t {
    data = 0x1,
    noise = 0x2,
    interleaver = 0x3,
    mismatch = 0x4,
    aux = 0x5,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
}  // namespace detail

inline std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t packet = 0) {
    std::uint64_t s = root;
    std::uint64_t a = detail::splitmix64(s);
    s ^= static_cast<std::uint64_t>(stream) * 0xD6E8FEB86659FD93ULL;
    std::uint64_t b = detail::splitmix64(s);
    s ^= packet * 0xCA5A826395121157ULL;
    std::uint64_t c = detail::splitmix64(s);
    return a ^ (b + 0x9E3779B97F4A7C15ULL * c);
}

}  // namespace sise
