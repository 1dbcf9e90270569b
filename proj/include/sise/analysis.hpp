#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sise/engine.hpp"

namespace sise {

/// Symmetric information rate of the binary-input AWGN channel,
/// C_b(snr) = 1 - E_tau[ log2(1 + exp(-2 tau sqrt(snr) - 2 snr)) ],
/// integrated over the Gaussian weight on [-12, 12] (negligible beyond) to
/// absolute tolerance 1e-9.
inline double binary_awgn_capacity(double snr) {
    if (snr < 0.0) throw std::invalid_argument("binary_awgn_capacity: snr must be >= 0");
    if (snr == 0.0) return 0.0;
    static const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * M_PI);
    static const double inv_ln2 = 1.0 / std::log(2.0);
    const double root = std::sqrt(snr);
    auto integrand = [&](double tau) {
        const double expo = -2.0 * tau * root - 2.0 * snr;
        double log_term;
        if (expo > 0.0)
            log_term = expo + std::log1p(std::exp(-expo));
        else
            log_term = std::log1p(std::exp(expo));
        return inv_sqrt_2pi * std::exp(-0.5 * tau * tau) * log_term * inv_ln2;
    };
    const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, -12.0, 12.0, 15, 1e-10);
    return 1.0 - integral;
}

/// Time-average MI estimator for consistent LLRs:
/// mean over n of 1 - log2(1 + exp(-x_n L_n)), clamped to [0, 1].
inline double estimate_mutual_information(const Vec& llr, const Vec& truth_symbols) {
    if (llr.size() != truth_symbols.size())
        throw std::invalid_argument("estimate_mutual_information: length mismatch");
    if (llr.empty()) return 0.0;
    static const double inv_ln2 = 1.0 / std::log(2.0);
    double acc = 0.0;
    for (std::size_t n = 0; n < llr.size(); ++n) {
        const double t = truth_symbols[n] * clip_llr(llr[n]);
        double log_term;
        if (t >= 0.0)
            log_term = std::log1p(std::exp(-t));
        else
            log_term = -t + std::log1p(std::exp(t));
        acc += 1.0 - log_term * inv_ln2;
    }
    return std::clamp(acc / static_cast<double>(llr.size()), 0.0, 1.0);
}

struct SnrLimit {
    EqKind kind = EqKind::LE;
    FilterMode mode = FilterMode::TI;
    double value = 0.0;         // linear output SNR at perfect a-priori
    double mi_ceiling = 0.0;    // C_b(value)
    double rho = 1.0;           // BiDFE inter-filter noise correlation
};

namespace detail {
// Noise correlation between the forward filter and the time-reversed filter
// run against a common white noise stream (the perfect-a-priori residual).
inline double measure_bidfe_rho(const Eigen::VectorXd& c_fwd, const Eigen::VectorXd& c_bwd,
                                int lh, std::uint64_t seed, int samples) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int lf = static_cast<int>(c_fwd.size()) - 1;
    const int span = lf + lh + 1;
    std::vector<double> w(samples + span, 0.0);
    for (double& v : w) v = gauss(rng);
    double sff = 0.0, sbb = 0.0, sfb = 0.0;
    for (int n = 0; n < samples; ++n) {
        double vf = 0.0, vb = 0.0;
        for (int m = 0; m <= lf; ++m) {
            vf += c_fwd(m) * w[n + m];
            const int idx = n + lh - m;
            if (idx >= 0) vb += c_bwd(m) * w[idx];
        }
        sff += vf * vf;
        sbb += vb * vb;
        sfb += vf * vb;
    }
    return sfb / std::sqrt(sff * sbb);
}
}  // namespace detail

/// Output SNR ceiling of an equalizer under perfect a-priori information.
/// QTI (and TV) designs reach the matched-filter bound 1/N0; TI designs are
/// limited by their fixed taps.  The TI-BiDFE factor 2/(1+rho) uses a rho
/// measured from a long noise-only simulation of the two filters.
inline SnrLimit snr_infinity(EqKind kind, FilterMode mode, const ChannelModel& ch, double n0,
                             const EqualizerSpec& spans, std::uint64_t rho_seed = 0x5eed,
                             int rho_samples = 1000000) {
    if (n0 <= 0.0) throw std::invalid_argument("snr_infinity: N0 must be positive");
    SnrLimit lim;
    lim.kind = kind;
    lim.mode = mode;
    if (mode != FilterMode::TI) {
        lim.value = 1.0 / n0;
        lim.mi_ceiling = binary_awgn_capacity(lim.value);
        return lim;
    }
    auto ti_snr = [&](const ChannelModel& c, bool dfe, Eigen::VectorXd* taps_out) {
        const ChannelMatrix cm = dfe
                                     ? build_channel_matrix(c, 0, spans.lf,
                                                            spans.ld >= 0 ? spans.ld : c.memory())
                                     : build_channel_matrix(c, spans.lc, spans.lf);
        const Eigen::MatrixXd& m = dfe ? Eigen::MatrixXd(cm.h2()) : cm.H;
        const Eigen::VectorXd ct =
            detail::wiener_solve(m, Eigen::VectorXd::Ones(m.cols()), n0, cm.h);
        if (taps_out) *taps_out = ct;
        const double beta = cm.h.dot(ct);
        return beta * beta / (n0 * ct.squaredNorm());
    };
    switch (kind) {
        case EqKind::LE:
            lim.value = ti_snr(ch, false, nullptr);
            break;
        case EqKind::DFE:
            lim.value = ti_snr(ch, true, nullptr);
            break;
        case EqKind::BIDFE: {
            Eigen::VectorXd c_fwd, c_bwd;
            const double dfe_snr = ti_snr(ch, true, &c_fwd);
            const ChannelModel rev{time_reverse(ch.taps), ch.noise_variance};
            ti_snr(rev, true, &c_bwd);
            lim.rho = detail::measure_bidfe_rho(c_fwd, c_bwd, ch.memory(), rho_seed, rho_samples);
            lim.value = 2.0 / (1.0 + lim.rho) * dfe_snr;
            break;
        }
        case EqKind::MAP:
            lim.value = 1.0 / n0;
            break;
    }
    lim.mi_ceiling = binary_awgn_capacity(lim.value);
    return lim;
}

struct ExitPoint {
    int iteration = 0;
    double mi_in = 0.0;
    double mi_out = 0.0;
    std::string module;     // "equalizer" or "decoder"
};

/// Per-iteration mutual-information transfer points from a fully recorded
/// run.  Equalizer entries are measured against the channel-order symbols,
/// decoder entries against the code-order coded symbols.
inline std::vector<ExitPoint> exit_trajectory(const IterationRecord& record,
                                              const Vec& truth_channel_symbols,
                                              const Vec& truth_code_symbols = {}) {
    std::vector<ExitPoint> points;
    for (const IterEntry& e : record.entries) {
        const bool eq = e.module == "equalizer" || e.module == "final";
        const bool dec = e.module == "decoder";
        if (!eq && !dec) continue;
        if (e.in_llr.empty() && e.out_llr.empty()) continue;
        const Vec& truth = eq ? truth_channel_symbols : truth_code_symbols;
        ExitPoint p;
        p.iteration = e.round;
        p.module = eq ? "equalizer" : "decoder";
        p.mi_in = e.in_llr.empty() ? 0.0 : estimate_mutual_information(e.in_llr, truth);
        p.mi_out = e.out_llr.empty() ? 0.0 : estimate_mutual_information(e.out_llr, truth);
        points.push_back(std::move(p));
    }
    return points;
}

}  // namespace sise
