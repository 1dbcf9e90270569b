#pragma once

#include <optional>

#include "sise/common.hpp"

namespace sise {

/// Per-symbol prior statistics derived from a-priori LLRs.
struct SymbolPriors {
    Vec mean;               // xbar_n = tanh(L_n / 2)
    Vec var;                // z_n = 1 - xbar_n^2
    double z_bar = 1.0;     // packet time-average of z_n
};

inline Vec symbol_mean_from_llr(const Vec& llr, std::optional<std::size_t> suppressed = {}) {
    Vec m(llr.size());
    for (std::size_t k = 0; k < llr.size(); ++k) m[k] = std::tanh(clip_llr(llr[k]) / 2.0);
    if (suppressed && *suppressed < m.size()) m[*suppressed] = 0.0;
    return m;
}

inline SymbolPriors priors_from_llr(const Vec& llr) {
    SymbolPriors p;
    p.mean = symbol_mean_from_llr(llr);
    p.var.resize(p.mean.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < p.mean.size(); ++k) {
        p.var[k] = 1.0 - p.mean[k] * p.mean[k];
        acc += p.var[k];
    }
    p.z_bar = p.mean.empty() ? 1.0 : acc / static_cast<double>(p.mean.size());
    return p;
}

/// Correlation state of a pair of LLR sequences under the equivalent-AWGN
/// model Y = x + u.  rho is clamped to [0, 0.999]; `degenerate` flags inputs
/// on which the time-average estimator is undefined (constant or single-sign
/// sequences, or fewer than two sign-agreeing samples).
struct CorrelationStats {
    double rho = 0.0;
    double m_a = 0.0;
    double m_e = 0.0;
    double lambda = 1.0;    // sqrt(N_a / N_e)
    double n_a = 0.0;
    double n_e = 0.0;
    bool degenerate = true;
};

namespace detail {
// Half the gap between the nonnegative-side and negative-side time averages.
// Returns nothing when either side is empty.
inline std::optional<double> sign_conditional_mean(const Vec& v) {
    double pos = 0.0, neg = 0.0;
    std::size_t npos = 0, nneg = 0;
    for (double x : v) {
        if (x >= 0.0) { pos += x; ++npos; }
        else          { neg += x; ++nneg; }
    }
    if (npos == 0 || nneg == 0) return std::nullopt;
    return 0.5 * (pos / static_cast<double>(npos) - neg / static_cast<double>(nneg));
}
}  // namespace detail

inline CorrelationStats estimate_correlation(const Vec& a, const Vec& e) {
    if (a.size() != e.size()) throw std::invalid_argument("estimate_correlation: length mismatch");
    CorrelationStats st;
    if (a.size() < 2) return st;

    Vec ac(a), ec(e);
    clip_llr(ac);
    clip_llr(ec);

    auto ma = detail::sign_conditional_mean(ac);
    auto me = detail::sign_conditional_mean(ec);
    if (!ma || !me) return st;
    st.m_a = std::max(*ma, 0.0);
    st.m_e = std::max(*me, 0.0);
    if (st.m_a > 0.0) st.n_a = 2.0 / st.m_a;
    if (st.m_e > 0.0) st.n_e = 2.0 / st.m_e;
    if (st.n_a > 0.0 && st.n_e > 0.0) st.lambda = std::sqrt(st.n_a / st.n_e);

    // Only samples whose two LLRs agree in sign enter the sums; the
    // restriction applies to numerator and denominator alike.
    double num = 0.0, da = 0.0, de = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < ac.size(); ++n) {
        const double sa = ac[n] >= 0.0 ? 1.0 : -1.0;
        const double se = ec[n] >= 0.0 ? 1.0 : -1.0;
        if (sa != se) continue;
        const double xa = ac[n] - sa * st.m_a;
        const double xe = ec[n] - se * st.m_e;
        num += xa * xe;
        da += xa * xa;
        de += xe * xe;
        ++count;
    }
    if (count < 2 || da <= 0.0 || de <= 0.0) return st;

    st.rho = std::clamp(num / std::sqrt(da * de), 0.0, 0.999);
    st.degenerate = false;
    return st;
}

/// The correlation-dependent branch scaling, alpha = (1 - rho) / (1 + rho).
inline double correlation_scale(double rho) {
    if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("correlation_scale: rho outside [0,1]");
    return (1.0 - rho) / (1.0 + rho);
}

/// Full closed-form MSE-optimal scaling for unequal branch noise statistics.
/// Kept for derivation checks; the runtime path uses correlation_scale().
inline double exact_alpha(double rho, double lambda, double n_a, double n_e) {
    if (std::abs(rho) >= 1.0) throw std::invalid_argument("exact_alpha: |rho| must be < 1");
    if (lambda <= 0.0 || n_a <= 0.0 || n_e <= 0.0)
        throw std::invalid_argument("exact_alpha: lambda, n_a, n_e must be positive");
    const double num =
        (lambda - rho) *
        (n_a * (1.0 + n_e) - lambda * rho * n_e * (1.0 + rho * std::sqrt(n_a * n_e)));
    const double den = lambda * (1.0 - rho * rho) * n_a * (1.0 + n_e);
    return num / den;
}

struct AprioriResult {
    Vec llr;
    double rho = 0.0;
    double alpha = 1.0;
    bool degenerate = true;
};

/// Turns an extrinsic sequence into a-priori information for the next
/// equalizer: estimate the correlation against the a-priori the producer
/// consumed, then scale.  Output polarity always matches the extrinsic.
inline AprioriResult make_a_priori(const Vec& extrinsic, const Vec& a_priori_used) {
    CorrelationStats st = estimate_correlation(a_priori_used, extrinsic);
    AprioriResult out;
    out.rho = st.degenerate ? 0.0 : st.rho;
    out.alpha = correlation_scale(out.rho);
    out.degenerate = st.degenerate;
    out.llr = extrinsic;
    for (double& l : out.llr) l = clip_llr(out.alpha * clip_llr(l));
    return out;
}

struct CombineResult {
    Vec llr;
    double xi = 0.0;
    double weight = 1.0;    // 1 / (1 + xi)
    bool degenerate = true;
};

/// Whitened sum of two correlated a-priori sequences, (l1 + l2) / (1 + xi).
inline CombineResult combine_two_branch(const Vec& l1, const Vec& l2) {
    if (l1.size() != l2.size()) throw std::invalid_argument("combine_two_branch: length mismatch");
    CorrelationStats st = estimate_correlation(l1, l2);
    CombineResult out;
    out.xi = st.degenerate ? 0.0 : st.rho;
    out.weight = 1.0 / (1.0 + out.xi);
    out.degenerate = st.degenerate;
    out.llr.resize(l1.size());
    for (std::size_t n = 0; n < l1.size(); ++n)
        out.llr[n] = clip_llr(out.weight * (clip_llr(l1[n]) + clip_llr(l2[n])));
    return out;
}

}  // namespace sise
