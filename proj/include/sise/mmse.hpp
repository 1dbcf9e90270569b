#pragma once

#include <Eigen/Dense>

#include "sise/signal.hpp"
#include "sise/softinfo.hpp"

namespace sise {

enum class FilterMode { TV, QTI, TI };

inline FilterMode filter_mode_from_string(std::string_view s) {
    if (s == "tv") return FilterMode::TV;
    if (s == "qti") return FilterMode::QTI;
    if (s == "ti") return FilterMode::TI;
    throw std::invalid_argument("unknown filter mode '" + std::string(s) + "'");
}

/// Banded channel response matrix over one observation window.
///
/// LE mode (feedback_span < 0): L = 1 + causal + anticausal rows, L + L_h
/// columns; row i carries h_{L_h}..h_0 shifted right by i.  DFE mode:
/// L = 1 + anticausal rows, L + feedback_span columns, split into H1 (past
/// symbols, first feedback_span columns) and H2 (current + future).
/// `h` is the coefficient column of the current symbol x_n in either mode.
struct ChannelMatrix {
    Eigen::MatrixXd H;
    Eigen::VectorXd h;
    Vec taps;
    int rows = 0;           // L
    int causal = 0;         // L_c (LE only)
    int anticausal = 0;     // L_f
    int feedback = -1;      // L_d (DFE only)
    int current = 0;        // column of x_n
    int lh = 0;
    bool dfe = false;

    Eigen::MatrixXd h1() const { return H.leftCols(feedback); }
    Eigen::MatrixXd h2() const { return H.rightCols(rows); }
};

inline ChannelMatrix build_channel_matrix(const ChannelModel& ch, int causal_span,
                                          int anticausal_span, int feedback_span = -1) {
    if (anticausal_span < 0 || (feedback_span < 0 && causal_span < 0))
        throw std::invalid_argument("build_channel_matrix: negative span");
    ChannelMatrix cm;
    cm.taps = ch.taps;
    cm.lh = ch.memory();
    cm.anticausal = anticausal_span;
    cm.dfe = feedback_span >= 0;
    if (cm.dfe) {
        cm.feedback = feedback_span;
        cm.causal = 0;
        cm.rows = 1 + anticausal_span;
        cm.current = feedback_span;
    } else {
        cm.causal = causal_span;
        cm.rows = 1 + causal_span + anticausal_span;
        cm.current = causal_span + cm.lh;
    }
    const int past = cm.dfe ? cm.feedback : cm.lh;
    const int cols = cm.rows + past;
    cm.H = Eigen::MatrixXd::Zero(cm.rows, cols);
    for (int i = 0; i < cm.rows; ++i)
        for (int k = 0; k <= cm.lh; ++k) {
            const int j = past + i - k;
            if (j >= 0 && j < cols) cm.H(i, j) = ch.taps[k];
        }
    cm.h = cm.H.col(cm.current);
    return cm;
}

namespace detail {
inline Eigen::VectorXd wiener_solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& a_diag,
                                    double n0, const Eigen::VectorXd& h) {
    if (n0 <= 0.0)
        throw std::invalid_argument("tap design requires N0 > 0");
    Eigen::MatrixXd m = H * a_diag.asDiagonal() * H.transpose();
    m.diagonal().array() += n0;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("wiener_solve: normal equations not positive definite");
    return llt.solve(h);
}

// Prior statistics with the zero-guard edge convention: xbar = 0, z = 1
// outside the packet.
struct PriorView {
    const SymbolPriors* p;
    int n;
    double mean(int k) const { return (k < 0 || k >= n) ? 0.0 : p->mean[k]; }
    double var(int k) const { return (k < 0 || k >= n) ? 1.0 : p->var[k]; }
};

// r minus the full prior-mean convolution; zero outside [valid_from, valid_to]
// so windows that run off the packet contribute no information.
inline Vec innovation(const Vec& r, int valid_from, int valid_to, const Vec& taps,
                      const PriorView& pv) {
    const int n = static_cast<int>(r.size());
    const int lh = static_cast<int>(taps.size()) - 1;
    Vec innov(n, 0.0);
    for (int i = std::max(valid_from, 0); i <= std::min(valid_to, n - 1); ++i) {
        double m = 0.0;
        for (int k = 0; k <= lh; ++k) m += taps[k] * pv.mean(i - k);
        innov[i] = r[i] - m;
    }
    return innov;
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}
}  // namespace detail

struct LeFilter {
    Eigen::VectorXd c;
    double beta = 0.0;      // h^T c
    FilterMode mode = FilterMode::QTI;
};

struct DfeFilter {
    Eigen::VectorXd c;      // feedforward, c_0..c_{-L_f}
    Eigen::VectorXd d;      // feedback, oldest-first: d_{L_d}..d_1
    double beta = 0.0;
    FilterMode mode = FilterMode::QTI;
};

/// QTI linear-equalizer taps: every symbol variance replaced by the stage
/// average z_bar except the current position, which is pinned to 1.
/// z_bar = 1 reproduces the TI design.
inline LeFilter design_le_qti(const ChannelMatrix& cm, double z_bar, double n0,
                              FilterMode mode = FilterMode::QTI) {
    Eigen::VectorXd a = Eigen::VectorXd::Constant(cm.H.cols(), z_bar);
    a(cm.current) = 1.0;
    LeFilter f;
    f.c = detail::wiener_solve(cm.H, a, n0, cm.h);
    f.beta = cm.h.dot(f.c);
    f.mode = mode;
    return f;
}

/// Per-symbol (time-varying) linear-equalizer taps at index n.
inline Eigen::VectorXd design_le_tv(const ChannelMatrix& cm, const SymbolPriors& priors, int n,
                                    double n0) {
    detail::PriorView pv{&priors, static_cast<int>(priors.var.size())};
    Eigen::VectorXd a(cm.H.cols());
    for (int j = 0; j < a.size(); ++j) a(j) = pv.var(n + j - cm.current);
    a(cm.current) = 1.0;
    return detail::wiener_solve(cm.H, a, n0, cm.h);
}

inline DfeFilter design_dfe_qti(const ChannelMatrix& cm, double z_bar, double n0,
                                FilterMode mode = FilterMode::QTI) {
    if (!cm.dfe) throw std::invalid_argument("design_dfe_qti: LE-mode channel matrix");
    Eigen::MatrixXd h2 = cm.h2();
    Eigen::VectorXd a = Eigen::VectorXd::Constant(h2.cols(), z_bar);
    a(0) = 1.0;
    DfeFilter f;
    f.c = detail::wiener_solve(h2, a, n0, cm.h);
    f.d = cm.h1().transpose() * f.c;
    f.beta = cm.h.dot(f.c);
    f.mode = mode;
    return f;
}

inline DfeFilter design_dfe_tv(const ChannelMatrix& cm, const SymbolPriors& priors, int n,
                               double n0) {
    if (!cm.dfe) throw std::invalid_argument("design_dfe_tv: LE-mode channel matrix");
    detail::PriorView pv{&priors, static_cast<int>(priors.var.size())};
    Eigen::MatrixXd h2 = cm.h2();
    Eigen::VectorXd a(h2.cols());
    a(0) = 1.0;
    for (int j = 1; j < a.size(); ++j) a(j) = pv.var(n + j);
    DfeFilter f;
    f.c = detail::wiener_solve(h2, a, n0, cm.h);
    f.d = cm.h1().transpose() * f.c;
    f.beta = cm.h.dot(f.c);
    f.mode = FilterMode::TV;
    return f;
}

/// Per-symbol equalizer outputs plus the statistics the extrinsic mappings
/// need.  err_pr1/err_mean are only filled by the DFE path.
struct EqualizedFrame {
    Vec y;
    Vec sigma2;
    Vec extrinsic;
    std::vector<int> hard;
    Vec err_pr1;            // Pr(i_n != 0)
    Vec err_mean;           // ibar_n
    double beta = 0.0;
    Vec beta_tv;            // per-symbol beta when mode == TV
};

/// LE output y_n = (r - rbar)^T c with the current symbol's mean suppressed
/// in rbar, plus the time-varying residual variance sigma2_n.
inline EqualizedFrame le_equalize(const Vec& r, const LeFilter& f, const ChannelMatrix& cm,
                                  const SymbolPriors& priors, double n0) {
    const int n = static_cast<int>(r.size());
    detail::PriorView pv{&priors, n};
    const Vec innov = detail::innovation(r, 0, n - 1, cm.taps, pv);

    const Eigen::VectorXd g = cm.H.transpose() * f.c;  // response to each window symbol
    const double floor_var = n0 * f.c.squaredNorm();

    EqualizedFrame out;
    out.beta = f.beta;
    out.y.resize(n);
    out.sigma2.resize(n);
    for (int i = 0; i < n; ++i) {
        double y = 0.0;
        for (int p = 0; p < cm.rows; ++p) {
            const int idx = i - cm.causal + p;
            if (idx >= 0 && idx < n) y += f.c(p) * innov[idx];
        }
        out.y[i] = y + f.beta * pv.mean(i);

        double s2 = floor_var;
        for (int j = 0; j < g.size(); ++j) {
            if (j == cm.current) continue;
            s2 += g(j) * g(j) * pv.var(i + j - cm.current);
        }
        out.sigma2[i] = s2;
    }
    return out;
}

/// Time-varying LE: per-symbol Wiener redesign; beta_tv carries h^T c_n.
inline EqualizedFrame le_equalize_tv(const Vec& r, const ChannelMatrix& cm,
                                     const SymbolPriors& priors, double n0) {
    const int n = static_cast<int>(r.size());
    detail::PriorView pv{&priors, n};
    const Vec innov = detail::innovation(r, 0, n - 1, cm.taps, pv);

    EqualizedFrame out;
    out.y.resize(n);
    out.sigma2.resize(n);
    out.beta_tv.resize(n);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd c = design_le_tv(cm, priors, i, n0);
        const Eigen::VectorXd g = cm.H.transpose() * c;
        const double beta = cm.h.dot(c);
        double y = 0.0;
        for (int p = 0; p < cm.rows; ++p) {
            const int idx = i - cm.causal + p;
            if (idx >= 0 && idx < n) y += c(p) * innov[idx];
        }
        out.y[i] = y + beta * pv.mean(i);
        double s2 = n0 * c.squaredNorm();
        for (int j = 0; j < g.size(); ++j) {
            if (j == cm.current) continue;
            s2 += g(j) * g(j) * pv.var(i + j - cm.current);
        }
        out.sigma2[i] = s2;
        out.beta_tv[i] = beta;
    }
    out.beta = out.beta_tv.empty() ? 0.0 : out.beta_tv[0];
    return out;
}

inline Vec le_extrinsic(const EqualizedFrame& frame, double beta) {
    Vec l(frame.y.size());
    for (std::size_t i = 0; i < l.size(); ++i) {
        const double b = frame.beta_tv.empty() ? beta : frame.beta_tv[i];
        l[i] = clip_llr(2.0 * b * frame.y[i] / frame.sigma2[i]);
    }
    return l;
}

/// Two-term extrinsic LLR of a DFE output that accounts for feedback errors:
/// the no-error conditional 2*beta*y/sigma2 and the error conditional
/// 2*phi/(1+|phi|) with phi = beta*(y - ibar/Pr)/sigma2, mixed by the error
/// probability.  pr_err = 0 and pr_err = 1 are exact algebraic limits.
inline double error_aware_llr(double y, double sigma2, double beta, double pr_err, double ibar) {
    const double l0 = 2.0 * beta * y / sigma2;
    if (pr_err <= 0.0) return l0;
    const double phi = beta * (y - ibar / pr_err) / sigma2;
    const double l1 = 2.0 * phi / (1.0 + std::abs(phi));
    if (pr_err >= 1.0) return l1;
    const double p0 = 1.0 - pr_err;
    const double num = detail::sigmoid(l0) * p0 + detail::sigmoid(l1) * pr_err;
    const double den = detail::sigmoid(-l0) * p0 + detail::sigmoid(-l1) * pr_err;
    return std::log(num) - std::log(den);
}

inline Vec dfe_extrinsic_error_aware(const EqualizedFrame& frame, double beta) {
    Vec l(frame.y.size());
    for (std::size_t i = 0; i < l.size(); ++i) {
        const double b = frame.beta_tv.empty() ? beta : frame.beta_tv[i];
        l[i] = clip_llr(
            error_aware_llr(frame.y[i], frame.sigma2[i], b, frame.err_pr1[i], frame.err_mean[i]));
    }
    return l;
}

/// Left-to-right DFE pass.  Per symbol: output with past means handled by
/// hard-decision feedback and future means by cancellation, residual
/// variance, the error-aware extrinsic, the prior-informed hard decision,
/// and the decision error probability consumed by later symbols.
///
/// valid_from marks the first observable sample (the time-reversed pass
/// loses the first L_h); windows outside [valid_from, N) carry no
/// information.
inline EqualizedFrame dfe_equalize(const Vec& r, const DfeFilter& filt, const ChannelMatrix& cm,
                                   const Vec& a_priori, double n0, int valid_from = 0) {
    if (!cm.dfe) throw std::invalid_argument("dfe_equalize: LE-mode channel matrix");
    const int n = static_cast<int>(r.size());
    const int ld = cm.feedback;
    const int lf = cm.anticausal;
    const SymbolPriors priors = priors_from_llr(a_priori);
    detail::PriorView pv{&priors, n};
    const Vec innov = detail::innovation(r, valid_from, n - 1, cm.taps, pv);

    const bool tv = filt.mode == FilterMode::TV;
    DfeFilter f = tv ? design_dfe_tv(cm, priors, 0, n0) : filt;
    const Eigen::MatrixXd h2t = cm.h2().transpose();
    Eigen::VectorXd g = h2t * f.c;
    double floor_var = n0 * f.c.squaredNorm();
    // Mean contributions of past symbols beyond the feedback span (only
    // nonempty when L_d < L_h): wpast[j] = sum_p c_p h_{p+j}.
    auto past_weights = [&](const Eigen::VectorXd& c) {
        Vec w(static_cast<std::size_t>(std::max(cm.lh - ld, 0)), 0.0);
        for (int j = ld + 1; j <= cm.lh; ++j) {
            double acc = 0.0;
            for (int p = 0; p + j <= cm.lh && p <= lf; ++p) acc += c(p) * cm.taps[p + j];
            w[j - ld - 1] = acc;
        }
        return w;
    };
    Vec wpast = past_weights(f.c);

    EqualizedFrame out;
    out.beta = f.beta;
    out.y.resize(n);
    out.sigma2.resize(n);
    out.extrinsic.resize(n);
    out.hard.resize(n);
    out.err_pr1.resize(n);
    out.err_mean.resize(n);
    if (tv) out.beta_tv.resize(n);

    Vec err_prob(n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (tv) {
            if (i > 0) f = design_dfe_tv(cm, priors, i, n0);
            g = h2t * f.c;
            floor_var = n0 * f.c.squaredNorm();
            wpast = past_weights(f.c);
            out.beta_tv[i] = f.beta;
        }
        double y = 0.0;
        for (int p = 0; p <= lf; ++p) {
            const int idx = i + p;
            if (idx >= 0 && idx < n) y += f.c(p) * innov[idx];
        }
        y += f.beta * pv.mean(i);
        // d is oldest-first: d(j) weights x_{i - (ld - j)}.
        double pr_ok = 1.0;
        double ibar = 0.0;
        for (int j = 0; j < ld; ++j) {
            const int idx = i - (ld - j);
            const double mean_past = pv.mean(idx);
            const double hard_past = (idx >= 0) ? static_cast<double>(out.hard[idx]) : 0.0;
            y += f.d(j) * (mean_past - hard_past);
            if (idx >= 0) {
                const double pe = err_prob[idx];
                pr_ok *= 1.0 - pe;
                ibar += f.d(j) * (-2.0 * hard_past) * pe;
            }
        }
        for (std::size_t j = 0; j < wpast.size(); ++j)
            y += wpast[j] * pv.mean(i - ld - 1 - static_cast<int>(j));
        out.y[i] = y;

        double s2 = floor_var;
        for (int j = 1; j <= lf; ++j) s2 += g(j) * g(j) * pv.var(i + j);
        out.sigma2[i] = s2;

        const double pr_err = 1.0 - pr_ok;
        out.err_pr1[i] = pr_err;
        out.err_mean[i] = ibar;
        const double le = clip_llr(error_aware_llr(y, s2, f.beta, pr_err, ibar));
        out.extrinsic[i] = le;

        const double la = i < static_cast<int>(a_priori.size()) ? clip_llr(a_priori[i]) : 0.0;
        const double bias = s2 * la / (2.0 * f.beta);
        out.hard[i] = (y + bias >= 0.0) ? +1 : -1;
        err_prob[i] = detail::sigmoid(-std::abs(le + la));
    }
    return out;
}

/// Per-symbol choice between two candidate decision sequences: whichever
/// reconstructs the received samples with smaller squared error over a
/// window centered on the symbol wins; ties go to the first candidate.
inline std::vector<int> arbitrate(const std::vector<int>& fwd_hard,
                                  const std::vector<int>& bwd_hard, const Vec& r,
                                  const ChannelModel& ch, int window = 15) {
    if (fwd_hard.size() != bwd_hard.size() || fwd_hard.size() != r.size())
        throw std::invalid_argument("arbitrate: length mismatch");
    if (window < 1 || window % 2 == 0) throw std::invalid_argument("arbitrate: window must be odd");
    const int n = static_cast<int>(r.size());
    const int lh = ch.memory();
    const int half = (window - 1) / 2;

    auto sqerr = [&](const std::vector<int>& hard) {
        Vec e(n);
        for (int i = 0; i < n; ++i) {
            double rec = 0.0;
            for (int k = 0; k <= lh && k <= i; ++k) rec += ch.taps[k] * hard[i - k];
            const double d = r[i] - rec;
            e[i] = d * d;
        }
        return e;
    };
    const Vec ef = sqerr(fwd_hard);
    const Vec eb = sqerr(bwd_hard);

    Vec pf(n + 1, 0.0), pb(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        pf[i + 1] = pf[i] + ef[i];
        pb[i + 1] = pb[i] + eb[i];
    }
    std::vector<int> out(n);
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half);
        const int hi = std::min(n - 1, i + half);
        const double wf = pf[hi + 1] - pf[lo];
        const double wb = pb[hi + 1] - pb[lo];
        out[i] = (wf <= wb) ? fwd_hard[i] : bwd_hard[i];
    }
    return out;
}

struct BiDfeConfig {
    int lf = 20;
    int ld = 6;
    int window = 15;
    FilterMode mode = FilterMode::QTI;
};

struct BiDfeOut {
    Vec extrinsic;
    std::vector<int> hard;
    Vec fwd_llr, bwd_llr;
    double rho_bi = 0.0;
};

namespace detail {
// Observation sequence for the time-reversed DFE.  Reversing both symbols and
// channel shifts the alignment by L_h: backward sample k maps to original
// sample N-1+L_h-k, so the first L_h backward positions have no observation.
inline Vec backward_received(const Vec& r, int lh) {
    const int n = static_cast<int>(r.size());
    Vec rb(n, 0.0);
    for (int k = lh; k < n; ++k) rb[k] = r[n - 1 + lh - k];
    return rb;
}
}  // namespace detail

/// Forward DFE on r plus a DFE on the time-reversed observations with the
/// time-reversed channel; extrinsics combined as (Lf + Lb) / (1 + rho_bi).
inline BiDfeOut bidfe_equalize(const Vec& r, const ChannelModel& ch, const Vec& a_priori,
                               double n0, const BiDfeConfig& cfg) {
    const int lh = ch.memory();
    const ChannelModel rev{time_reverse(ch.taps), ch.noise_variance};
    const ChannelMatrix cm_f = build_channel_matrix(ch, 0, cfg.lf, cfg.ld);
    const ChannelMatrix cm_b = build_channel_matrix(rev, 0, cfg.lf, cfg.ld);

    const double z_bar =
        cfg.mode == FilterMode::TI ? 1.0 : priors_from_llr(a_priori).z_bar;
    const DfeFilter f_f = cfg.mode == FilterMode::TV
                              ? DfeFilter{Eigen::VectorXd(), Eigen::VectorXd(), 0.0, FilterMode::TV}
                              : design_dfe_qti(cm_f, z_bar, n0, cfg.mode);
    const DfeFilter f_b = cfg.mode == FilterMode::TV
                              ? DfeFilter{Eigen::VectorXd(), Eigen::VectorXd(), 0.0, FilterMode::TV}
                              : design_dfe_qti(cm_b, z_bar, n0, cfg.mode);

    EqualizedFrame fwd = dfe_equalize(r, f_f, cm_f, a_priori, n0, 0);

    const Vec rb = detail::backward_received(r, lh);
    const Vec ap_rev = time_reverse(a_priori);
    EqualizedFrame bwd_frame = dfe_equalize(rb, f_b, cm_b, ap_rev, n0, lh);

    BiDfeOut out;
    out.fwd_llr = fwd.extrinsic;
    out.bwd_llr = time_reverse(bwd_frame.extrinsic);
    const std::vector<int> bwd_hard = time_reverse(bwd_frame.hard);

    CorrelationStats st = estimate_correlation(out.fwd_llr, out.bwd_llr);
    out.rho_bi = st.degenerate ? 0.0 : st.rho;
    out.extrinsic.resize(r.size());
    const double w = 1.0 / (1.0 + out.rho_bi);
    for (std::size_t i = 0; i < r.size(); ++i)
        out.extrinsic[i] = clip_llr(w * (out.fwd_llr[i] + out.bwd_llr[i]));
    out.hard = arbitrate(fwd.hard, bwd_hard, r, ch, cfg.window);
    return out;
}

}  // namespace sise
