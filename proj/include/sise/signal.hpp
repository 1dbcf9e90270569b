#pragma once

#include <random>
#include <string_view>

#include "sise/common.hpp"

namespace sise {

/// Real-valued ISI channel: unit-energy taps h_0..h_{L_h} plus AWGN variance N0.
struct ChannelModel {
    Vec taps;
    double noise_variance = 0.0;

    int memory() const { return static_cast<int>(taps.size()) - 1; }
};

inline Vec normalize_taps(const Vec& raw) {
    double energy = 0.0;
    for (double t : raw) energy += t * t;
    if (raw.empty() || energy <= 0.0)
        throw std::invalid_argument("normalize_taps: tap vector is empty or all-zero");
    Vec out(raw);
    double scale = 1.0 / std::sqrt(energy);
    for (double& t : out) t *= scale;
    return out;
}

inline ChannelModel make_channel(const Vec& raw_taps, double n0 = 0.0) {
    return ChannelModel{normalize_taps(raw_taps), n0};
}

/// 0 -> +1, 1 -> -1. Fixed globally so encoder, equalizers and decoder agree.
inline Vec bpsk_map(const std::vector<int>& bits) {
    Vec s(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] ? -1.0 : +1.0;
    return s;
}

inline std::vector<int> hard_to_bits(const std::vector<int>& symbols) {
    std::vector<int> b(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) b[i] = symbols[i] > 0 ? 0 : 1;
    return b;
}

inline std::vector<int> random_bits(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<int> bits(n);
    for (auto& b : bits) b = static_cast<int>(rng() & 1u);
    return bits;
}

/// r_n = sum_k h_k x_{n-k} + w_n for n in [0, N).  Symbols outside the packet
/// are zero guards: they contribute nothing to the noiseless output.
inline Vec apply_channel(const Vec& x, const ChannelModel& ch, std::uint64_t seed) {
    if (x.empty()) throw std::invalid_argument("apply_channel: empty symbol sequence");
    const int n = static_cast<int>(x.size());
    const int lh = ch.memory();
    Vec r(x.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = 0; k <= lh && k <= i; ++k) acc += ch.taps[k] * x[i - k];
        r[i] = acc;
    }
    if (ch.noise_variance > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, std::sqrt(ch.noise_variance));
        for (double& v : r) v += gauss(rng);
    }
    return r;
}

template <typename T>
inline std::vector<T> time_reverse(std::vector<T> s) {
    std::reverse(s.begin(), s.end());
    return s;
}

/// Receiver-side channel estimate with per-tap multiplicative Gaussian error
/// whose relative scale drops as 0.1/sqrt(SNR).  Drawn once per packet and
/// held fixed through all iterations; not re-normalized.
inline Vec mismatch_perturb(const Vec& taps, double snr_linear, std::uint64_t seed) {
    if (snr_linear <= 0.0) throw std::invalid_argument("mismatch_perturb: snr must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double scale = 0.1 / std::sqrt(snr_linear);
    Vec out(taps.size());
    for (std::size_t i = 0; i < taps.size(); ++i) out[i] = (1.0 + scale * gauss(rng)) * taps[i];
    return out;
}

/// Catalog of the four fixed test channels, all palindromic, all unit energy.
inline ChannelModel standard_channel(std::string_view name) {
    const double s2 = std::sqrt(2.0);
    if (name == "h1") return make_channel({1, 2, 1});
    if (name == "h2") return make_channel({1, 2, 3, 4, 3, 2, 1});
    if (name == "h3") return make_channel({1, 2, 3, 4, 5, 4, 3, 2, 1});
    if (name == "h4")
        return make_channel(
            {1, 1 / s2, 4, 3 / s2, 29.0 / 4, 17.0 / (4 * s2), 29.0 / 4, 3 / s2, 4, 1 / s2, 1});
    throw std::invalid_argument("standard_channel: unknown channel '" + std::string(name) + "'");
}

}  // namespace sise
