#pragma once

#include <random>

#include "sise/signal.hpp"

namespace sise {

/// Rate-1/2 recursive systematic convolutional code, feedback 1+D+D^2,
/// parity 1+D^2, four states.  Codewords are terminated with two tail input
/// bits that drive the register to zero; tail pairs are transmitted, so a
/// K-bit message becomes 2*(K+2) coded bits, systematic first in each pair.
struct RscCode {
    static constexpr int kStates = 4;
    static constexpr int kTail = 2;

    static int next_state(int state, int in_bit) {
        const int s1 = state & 1, s2 = (state >> 1) & 1;
        const int a = in_bit ^ s1 ^ s2;
        return (s1 << 1) | a;
    }
    static int parity(int state, int in_bit) {
        const int s1 = state & 1, s2 = (state >> 1) & 1;
        const int a = in_bit ^ s1 ^ s2;
        return a ^ s2;
    }
    // Input that steers the register toward zero (makes the feedback bit 0).
    static int tail_bit(int state) { return (state & 1) ^ ((state >> 1) & 1); }
};

inline std::vector<int> rsc_encode(const std::vector<int>& msg) {
    std::vector<int> coded;
    coded.reserve(2 * (msg.size() + RscCode::kTail));
    int state = 0;
    for (int b : msg) {
        coded.push_back(b);
        coded.push_back(RscCode::parity(state, b));
        state = RscCode::next_state(state, b);
    }
    for (int t = 0; t < RscCode::kTail; ++t) {
        const int b = RscCode::tail_bit(state);
        coded.push_back(b);
        coded.push_back(RscCode::parity(state, b));
        state = RscCode::next_state(state, b);
    }
    return coded;
}

/// Seeded random permutation with its inverse; covers the full coded packet.
struct Interleaver {
    std::vector<int> perm;      // output[i] = input[perm[i]]
    std::vector<int> inv;

    Interleaver() = default;
    Interleaver(std::size_t length, std::uint64_t seed) {
        perm.resize(length);
        for (std::size_t i = 0; i < length; ++i) perm[i] = static_cast<int>(i);
        std::mt19937_64 rng(seed);
        for (std::size_t i = length; i > 1; --i) {
            const std::size_t j = rng() % i;
            std::swap(perm[i - 1], perm[j]);
        }
        build_inverse();
    }
    static Interleaver identity(std::size_t length) {
        Interleaver il;
        il.perm.resize(length);
        for (std::size_t i = 0; i < length; ++i) il.perm[i] = static_cast<int>(i);
        il.build_inverse();
        return il;
    }
    void build_inverse() {
        inv.resize(perm.size());
        for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
    }
    std::size_t size() const { return perm.size(); }
};

template <typename T>
inline std::vector<T> interleave(const std::vector<T>& s, const Interleaver& il) {
    if (s.size() != il.size()) throw std::invalid_argument("interleave: length mismatch");
    std::vector<T> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[il.perm[i]];
    return out;
}

template <typename T>
inline std::vector<T> deinterleave(const std::vector<T>& s, const Interleaver& il) {
    if (s.size() != il.size()) throw std::invalid_argument("deinterleave: length mismatch");
    std::vector<T> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[il.perm[i]] = s[i];
    return out;
}

/// Exact a-posteriori symbol LLRs minus the a-priori, computed by the
/// forward-backward recursion over the 2^{L_h}-state ISI trellis in the log
/// domain.  The leading edge models the zero guard exactly: branch outputs
/// at time n < L_h only sum taps that reach into the packet, and the start
/// state is pinned.  The trailing state is free.
inline Vec bcjr_equalize(const Vec& r, const ChannelModel& ch, const Vec& a_priori, double n0) {
    const int lh = ch.memory();
    if (lh > 10) throw std::invalid_argument("bcjr_equalize: channel memory above 10");
    if (n0 <= 0.0) throw std::invalid_argument("bcjr_equalize: N0 must be positive");
    const int n = static_cast<int>(r.size());
    const int states = 1 << lh;
    constexpr double kNegInf = -1e300;

    // State bit j holds the symbol sign of x_{n-1-j} (1 => +1).
    auto sym = [](int bit) { return bit ? +1.0 : -1.0; };
    // Steady-state branch outputs for n >= lh.
    std::vector<double> out_full(static_cast<std::size_t>(states) * 2);
    for (int s = 0; s < states; ++s)
        for (int i = 0; i < 2; ++i) {
            double acc = ch.taps[0] * sym(i);
            for (int j = 1; j <= lh; ++j) acc += ch.taps[j] * sym((s >> (j - 1)) & 1);
            out_full[static_cast<std::size_t>(s) * 2 + i] = acc;
        }
    auto branch_out = [&](int t, int s, int i) {
        if (t >= lh) return out_full[static_cast<std::size_t>(s) * 2 + i];
        double acc = ch.taps[0] * sym(i);
        for (int j = 1; j <= lh && j <= t; ++j) acc += ch.taps[j] * sym((s >> (j - 1)) & 1);
        return acc;
    };
    const int mask = states - 1;
    auto next_state = [&](int s, int i) { return ((s << 1) | i) & mask; };

    const double inv_2n0 = 1.0 / (2.0 * n0);
    auto gamma = [&](int t, int s, int i) {
        const double d = r[t] - branch_out(t, s, i);
        const double la = t < static_cast<int>(a_priori.size()) ? clip_llr(a_priori[t]) : 0.0;
        return -d * d * inv_2n0 + sym(i) * la * 0.5;
    };

    // Backward metrics, stored for the extrinsic pass.
    std::vector<Vec> beta(static_cast<std::size_t>(n) + 1, Vec(states));
    std::fill(beta[n].begin(), beta[n].end(), 0.0);
    for (int t = n - 1; t >= 0; --t) {
        double peak = kNegInf;
        for (int s = 0; s < states; ++s) {
            double acc = kNegInf;
            for (int i = 0; i < 2; ++i)
                acc = maxstar(acc, gamma(t, s, i) + beta[t + 1][next_state(s, i)]);
            beta[t][s] = acc;
            peak = std::max(peak, acc);
        }
        for (double& v : beta[t]) v -= peak;
    }

    Vec alpha(states, kNegInf), alpha_next(states);
    alpha[0] = 0.0;
    Vec extrinsic(n);
    for (int t = 0; t < n; ++t) {
        double num = kNegInf, den = kNegInf;
        std::fill(alpha_next.begin(), alpha_next.end(), kNegInf);
        for (int s = 0; s < states; ++s) {
            if (alpha[s] <= kNegInf) continue;
            for (int i = 0; i < 2; ++i) {
                const int ns = next_state(s, i);
                const double m = alpha[s] + gamma(t, s, i);
                alpha_next[ns] = maxstar(alpha_next[ns], m);
                const double full = m + beta[t + 1][ns];
                if (i) num = maxstar(num, full);
                else den = maxstar(den, full);
            }
        }
        const double la = t < static_cast<int>(a_priori.size()) ? clip_llr(a_priori[t]) : 0.0;
        extrinsic[t] = clip_llr(num - den - la);
        double peak = kNegInf;
        for (double v : alpha_next) peak = std::max(peak, v);
        for (int s = 0; s < states; ++s) alpha[s] = alpha_next[s] - peak;
    }
    return extrinsic;
}

struct DecodeResult {
    Vec coded_extrinsic;        // one value per coded bit, systematic/parity interleaved
    Vec message_posterior;      // full posterior LLR per message bit
};

/// Log-domain forward-backward over the four-state code trellis.  The input
/// is one LLR per coded bit in code order; tail steps have their input bit
/// forced by the termination rule.  Both ends are pinned to state zero.
inline DecodeResult bcjr_decode(const Vec& coded_llr, int message_len) {
    const int steps = message_len + RscCode::kTail;
    if (static_cast<int>(coded_llr.size()) != 2 * steps)
        throw std::invalid_argument("bcjr_decode: coded length inconsistent with message length");
    constexpr int kS = RscCode::kStates;
    constexpr double kNegInf = -1e300;
    auto sym = [](int bit) { return bit ? -1.0 : +1.0; };

    auto gamma = [&](int t, int s, int b) {
        const double ls = clip_llr(coded_llr[2 * t]);
        const double lp = clip_llr(coded_llr[2 * t + 1]);
        return 0.5 * (sym(b) * ls + sym(RscCode::parity(s, b)) * lp);
    };
    auto allowed = [&](int t, int s, int b) {
        return t < message_len || b == RscCode::tail_bit(s);
    };

    std::vector<Vec> beta(static_cast<std::size_t>(steps) + 1, Vec(kS, kNegInf));
    beta[steps][0] = 0.0;
    for (int t = steps - 1; t >= 0; --t) {
        double peak = kNegInf;
        for (int s = 0; s < kS; ++s) {
            double acc = kNegInf;
            for (int b = 0; b < 2; ++b) {
                if (!allowed(t, s, b)) continue;
                acc = maxstar(acc, gamma(t, s, b) + beta[t + 1][RscCode::next_state(s, b)]);
            }
            beta[t][s] = acc;
            peak = std::max(peak, acc);
        }
        if (peak > kNegInf)
            for (double& v : beta[t]) v -= peak;
    }

    DecodeResult out;
    out.coded_extrinsic.resize(2 * steps);
    out.message_posterior.resize(message_len);

    Vec alpha(kS, kNegInf), alpha_next(kS);
    alpha[0] = 0.0;
    for (int t = 0; t < steps; ++t) {
        // Bit metrics: systematic (input bit) and parity, each as {L|bit=0, L|bit=1}.
        double sys0 = kNegInf, sys1 = kNegInf, par0 = kNegInf, par1 = kNegInf;
        std::fill(alpha_next.begin(), alpha_next.end(), kNegInf);
        for (int s = 0; s < kS; ++s) {
            if (alpha[s] <= kNegInf) continue;
            for (int b = 0; b < 2; ++b) {
                if (!allowed(t, s, b)) continue;
                const int ns = RscCode::next_state(s, b);
                const double m = alpha[s] + gamma(t, s, b);
                alpha_next[ns] = maxstar(alpha_next[ns], m);
                const double full = m + beta[t + 1][ns];
                if (b) sys1 = maxstar(sys1, full);
                else sys0 = maxstar(sys0, full);
                if (RscCode::parity(s, b)) par1 = maxstar(par1, full);
                else par0 = maxstar(par0, full);
            }
        }
        const double post_sys = sys0 - sys1;  // ln P(bit=0)/P(bit=1)
        const double post_par = par0 - par1;
        out.coded_extrinsic[2 * t] = clip_llr(post_sys - clip_llr(coded_llr[2 * t]));
        out.coded_extrinsic[2 * t + 1] = clip_llr(post_par - clip_llr(coded_llr[2 * t + 1]));
        if (t < message_len) out.message_posterior[t] = clip_llr(post_sys);
        double peak = kNegInf;
        for (double v : alpha_next) peak = std::max(peak, v);
        for (int s = 0; s < kS; ++s) alpha[s] = alpha_next[s] - peak;
    }
    return out;
}

}  // namespace sise
