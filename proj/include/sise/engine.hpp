#pragma once

#include <limits>

#include "sise/equalizer.hpp"

namespace sise {

enum class Schedule { UNCODED, SISE1, SISE2, SINGLE };

inline Schedule schedule_from_string(std::string_view s) {
    if (s == "uncoded") return Schedule::UNCODED;
    if (s == "sise1") return Schedule::SISE1;
    if (s == "sise2") return Schedule::SISE2;
    if (s == "single") return Schedule::SINGLE;
    throw std::invalid_argument("unknown schedule '" + std::string(s) + "'");
}

struct SiseConfig {
    EqualizerSpec main;
    std::vector<EqualizerSpec> branches;
    Schedule schedule = Schedule::SINGLE;
    int self_iterations = 2;                // uncoded loop
    std::optional<double> forced_rho;       // test hook for the scaling interfaces
};

enum class RecordLevel { kNone, kBer, kFull };

/// Append-only per-packet ledger: one entry per module invocation, with the
/// correlation/scaling diagnostics and (optionally) the LLR streams at that
/// interface plus a running error count against the truth.
struct IterEntry {
    int round = 0;
    std::string module;     // "equalizer", "equalizer_inner", "branch<i>", "decoder", "final"
    double rho = std::numeric_limits<double>::quiet_NaN();
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double xi = std::numeric_limits<double>::quiet_NaN();
    long errors = -1;
    long bits = 0;
    Vec in_llr, out_llr;
};

struct IterationRecord {
    std::vector<IterEntry> entries;
    int main_passes = 0;
    int branch_passes = 0;
    int decoder_passes = 0;
    int latency_t_per_round = 0;
};

namespace detail {

struct BranchState {
    SisoEqualizer eq;
    Vec contribution;       // alpha_i * L^(i)_{a,M} as it entered the last combine
    Vec am;                 // scaled branch extrinsic L^(i)_{a,M}
};

inline long count_bit_errors(const std::vector<int>& hard, const std::vector<int>& truth_bits) {
    long e = 0;
    for (std::size_t i = 0; i < truth_bits.size() && i < hard.size(); ++i)
        e += (hard[i] > 0 ? 0 : 1) != truth_bits[i];
    return e;
}

inline double estimate_or_force(const Vec& a, const Vec& b, const std::optional<double>& forced) {
    if (forced) return *forced;
    const CorrelationStats st = estimate_correlation(a, b);
    return st.degenerate ? 0.0 : st.rho;
}

inline Vec scaled(const Vec& v, double alpha) {
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = clip_llr(alpha * clip_llr(v[i]));
    return out;
}

/// One pass of the branch block: distribute the main extrinsic with
/// per-branch correlation compensation, run every branch, compensate the
/// branch extrinsics, and combine them into the next main a-priori.
/// Updates each branch's stored combine-weighted contribution.
inline Vec branch_sweep(const Vec& r, const Vec& main_extrinsic,
                        std::vector<BranchState>& branches,
                        const std::optional<double>& forced_rho, int round,
                        IterationRecord& rec, RecordLevel lvl) {
    std::vector<Vec> am(branches.size());
    for (std::size_t i = 0; i < branches.size(); ++i) {
        BranchState& b = branches[i];
        const double rho_m = estimate_or_force(main_extrinsic, b.contribution, forced_rho);
        const Vec la_b = scaled(main_extrinsic, correlation_scale(rho_m));
        SisoOutput out = b.eq.run(r, la_b);
        ++rec.branch_passes;
        const double rho_b = estimate_or_force(out.extrinsic, la_b, forced_rho);
        am[i] = scaled(out.extrinsic, correlation_scale(rho_b));

        IterEntry e;
        e.round = round;
        e.module = "branch" + std::to_string(i);
        e.rho = rho_b;
        e.alpha = correlation_scale(rho_b);
        e.xi = rho_m;
        if (lvl == RecordLevel::kFull) {
            e.in_llr = la_b;
            e.out_llr = out.extrinsic;
        }
        rec.entries.push_back(std::move(e));
    }
    // Pairwise whitened combining in branch-index order.
    std::vector<double> w(branches.size(), 1.0);
    Vec acc = am[0];
    for (std::size_t i = 1; i < branches.size(); ++i) {
        const CombineResult c = combine_two_branch(acc, am[i]);
        acc = c.llr;
        for (std::size_t j = 0; j < i; ++j) w[j] *= c.weight;
        w[i] = c.weight;
    }
    for (std::size_t i = 0; i < branches.size(); ++i) {
        branches[i].am = am[i];
        branches[i].contribution = scaled(am[i], w[i]);
    }
    return acc;
}

/// Joins branch feedback and decoder feedback into the main a-priori; the
/// branches' stored contributions are rescaled by the combine weight so the
/// next correlation estimate sees what actually entered the a-priori.
inline Vec join_with_decoder(const Vec& branch_part, const Vec& decoder_part,
                             std::vector<BranchState>& branches, double* xi_out) {
    if (branch_part.empty()) return decoder_part;
    if (decoder_part.empty()) return branch_part;
    const CombineResult c = combine_two_branch(branch_part, decoder_part);
    if (xi_out) *xi_out = c.xi;
    for (BranchState& b : branches) b.contribution = scaled(b.contribution, c.weight);
    return c.llr;
}

// Aggregate branch contribution currently inside the main a-priori.
inline Vec total_contribution(const std::vector<BranchState>& branches, std::size_t n) {
    Vec total(n, 0.0);
    for (const BranchState& b : branches)
        for (std::size_t i = 0; i < n; ++i) total[i] += b.contribution[i];
    return total;
}

}  // namespace detail

struct UncodedResult {
    std::vector<int> hard;
    Vec final_a_priori;
    IterationRecord record;
};

/// Self-iterating equalizer for the uncoded system: per cycle, the main
/// equalizer's extrinsic (correlation-compensated per branch) feeds the
/// branches, the compensated branch extrinsics are combined back into the
/// main a-priori, and after the configured cycles a final main pass
/// releases hard decisions.
inline UncodedResult sise_uncoded(const Vec& r, const ChannelModel& believed, double n0,
                                  const SiseConfig& cfg, RecordLevel lvl = RecordLevel::kNone,
                                  const std::vector<int>* truth_bits = nullptr) {
    const std::size_t n = r.size();
    SisoEqualizer main_eq(cfg.main, believed, n0);
    std::vector<detail::BranchState> branches;
    for (const EqualizerSpec& s : cfg.branches)
        branches.push_back({SisoEqualizer(s, believed, n0), Vec(n, 0.0), Vec(n, 0.0)});

    UncodedResult res;
    res.record.latency_t_per_round = 2;
    Vec la(n, 0.0);
    for (int it = 1; it <= cfg.self_iterations && !branches.empty(); ++it) {
        SisoOutput main_out = main_eq.run(r, la);
        ++res.record.main_passes;
        IterEntry e;
        e.round = it;
        e.module = "equalizer";
        if (truth_bits && lvl != RecordLevel::kNone) {
            e.errors = detail::count_bit_errors(main_out.hard, *truth_bits);
            e.bits = static_cast<long>(truth_bits->size());
        }
        if (lvl == RecordLevel::kFull) {
            e.in_llr = la;
            e.out_llr = main_out.extrinsic;
        }
        res.record.entries.push_back(std::move(e));
        la = detail::branch_sweep(r, main_out.extrinsic, branches, cfg.forced_rho, it, res.record,
                                  lvl);
    }

    SisoOutput fin = main_eq.run(r, la);
    ++res.record.main_passes;
    IterEntry e;
    e.round = cfg.self_iterations + 1;
    e.module = "final";
    if (truth_bits && lvl != RecordLevel::kNone) {
        e.errors = detail::count_bit_errors(fin.hard, *truth_bits);
        e.bits = static_cast<long>(truth_bits->size());
    }
    if (lvl == RecordLevel::kFull) {
        e.in_llr = la;
        e.out_llr = fin.extrinsic;
    }
    res.record.entries.push_back(std::move(e));
    res.hard = std::move(fin.hard);
    res.final_a_priori = std::move(la);
    return res;
}

struct CodedResult {
    std::vector<int> message;
    IterationRecord record;
};

/// Turbo loop over equalizer(s) and decoder.  SINGLE alternates the main
/// equalizer and the decoder.  SISE1 completes one main-branch-main
/// self-iteration before each decoder pass (cost 2
/// main + branch + decoder per round, latency 4T).  SISE2 sends the
/// correlation-compensated main extrinsic to the branches and the decoder
/// simultaneously (cost main + branch + decoder, latency 2T).
/// outer_iterations = 0 degenerates to raw equalize-then-decode.
inline CodedResult turbo_run(const Vec& r, const ChannelModel& believed, double n0,
                             const SiseConfig& cfg, const Interleaver& il, int message_len,
                             int outer_iterations, RecordLevel lvl = RecordLevel::kNone,
                             const std::vector<int>* truth_msg = nullptr) {
    const std::size_t n = r.size();
    if (il.size() != n) throw std::invalid_argument("turbo_run: interleaver/packet length mismatch");
    const Schedule sched =
        (outer_iterations == 0 || cfg.branches.empty()) ? Schedule::SINGLE : cfg.schedule;
    const int rounds = std::max(1, outer_iterations);

    SisoEqualizer main_eq(cfg.main, believed, n0);
    std::vector<detail::BranchState> branches;
    if (sched == Schedule::SISE1 || sched == Schedule::SISE2)
        for (const EqualizerSpec& s : cfg.branches)
            branches.push_back({SisoEqualizer(s, believed, n0), Vec(n, 0.0), Vec(n, 0.0)});

    CodedResult res;
    res.record.latency_t_per_round = sched == Schedule::SISE1 ? 4 : 2;

    Vec dec_feedback;           // channel order; empty until the first decoder pass
    Vec branch_feedback;        // combined branch a-priori, channel order
    Vec msg_posterior;

    auto record_equalizer = [&](int round, const char* module, const Vec& in, const Vec& out,
                                double rho, double alpha, double xi) {
        IterEntry e;
        e.round = round;
        e.module = module;
        e.rho = rho;
        e.alpha = alpha;
        e.xi = xi;
        if (lvl == RecordLevel::kFull) {
            e.in_llr = in;
            e.out_llr = out;
        }
        res.record.entries.push_back(std::move(e));
    };

    auto run_decoder = [&](int round, const Vec& to_decoder_channel_order) {
        const Vec dec_in = deinterleave(to_decoder_channel_order, il);
        DecodeResult dec = bcjr_decode(dec_in, message_len);
        ++res.record.decoder_passes;
        IterEntry e;
        e.round = round;
        e.module = "decoder";
        if (truth_msg && lvl != RecordLevel::kNone) {
            long errs = 0;
            for (int k = 0; k < message_len; ++k)
                errs += ((dec.message_posterior[k] >= 0.0 ? 0 : 1) != (*truth_msg)[k]);
            e.errors = errs;
            e.bits = message_len;
        }
        if (lvl == RecordLevel::kFull) {
            e.in_llr = dec_in;
            e.out_llr = dec.coded_extrinsic;
        }
        res.record.entries.push_back(std::move(e));
        dec_feedback = interleave(dec.coded_extrinsic, il);
        msg_posterior = std::move(dec.message_posterior);
    };

    for (int round = 1; round <= rounds; ++round) {
        double xi = std::numeric_limits<double>::quiet_NaN();
        Vec la = detail::join_with_decoder(branch_feedback, dec_feedback, branches, &xi);
        if (la.empty()) la.assign(n, 0.0);

        if (sched == Schedule::SINGLE) {
            SisoOutput out = main_eq.run(r, la);
            ++res.record.main_passes;
            record_equalizer(round, "equalizer", la, out.extrinsic, 0.0, 1.0, xi);
            run_decoder(round, out.extrinsic);
            continue;
        }

        if (sched == Schedule::SISE2) {
            SisoOutput out = main_eq.run(r, la);
            ++res.record.main_passes;
            const Vec total = detail::total_contribution(branches, n);
            const double rho = detail::estimate_or_force(out.extrinsic, total, cfg.forced_rho);
            const double alpha = correlation_scale(rho);
            const Vec compensated = detail::scaled(out.extrinsic, alpha);
            record_equalizer(round, "equalizer", la, compensated, rho, alpha, xi);
            branch_feedback = detail::branch_sweep(r, out.extrinsic, branches, cfg.forced_rho,
                                                   round, res.record, lvl);
            run_decoder(round, compensated);
            continue;
        }

        // SISE1: main, branch block, main again, then the decoder.
        SisoOutput first = main_eq.run(r, la);
        ++res.record.main_passes;
        record_equalizer(round, "equalizer_inner", la, first.extrinsic, 0.0, 1.0, xi);
        branch_feedback = detail::branch_sweep(r, first.extrinsic, branches, cfg.forced_rho, round,
                                               res.record, lvl);
        double xi2 = std::numeric_limits<double>::quiet_NaN();
        Vec la2 = detail::join_with_decoder(branch_feedback, dec_feedback, branches, &xi2);
        SisoOutput second = main_eq.run(r, la2);
        ++res.record.main_passes;
        const Vec total = detail::total_contribution(branches, n);
        const double rho = detail::estimate_or_force(second.extrinsic, total, cfg.forced_rho);
        const double alpha = correlation_scale(rho);
        const Vec compensated = detail::scaled(second.extrinsic, alpha);
        record_equalizer(round, "equalizer", la2, compensated, rho, alpha, xi2);
        run_decoder(round, compensated);
    }

    res.message.resize(message_len);
    for (int k = 0; k < message_len; ++k) res.message[k] = msg_posterior[k] >= 0.0 ? 0 : 1;
    return res;
}

inline CodedResult single_turbo(const Vec& r, const ChannelModel& believed, double n0,
                                const EqualizerSpec& main, const Interleaver& il, int message_len,
                                int outer_iterations, RecordLevel lvl = RecordLevel::kNone,
                                const std::vector<int>* truth_msg = nullptr) {
    SiseConfig cfg;
    cfg.main = main;
    cfg.schedule = Schedule::SINGLE;
    return turbo_run(r, believed, n0, cfg, il, message_len, outer_iterations, lvl, truth_msg);
}

inline CodedResult sise1_turbo(const Vec& r, const ChannelModel& believed, double n0,
                               const SiseConfig& cfg, const Interleaver& il, int message_len,
                               int outer_iterations, RecordLevel lvl = RecordLevel::kNone,
                               const std::vector<int>* truth_msg = nullptr) {
    SiseConfig c = cfg;
    c.schedule = Schedule::SISE1;
    return turbo_run(r, believed, n0, c, il, message_len, outer_iterations, lvl, truth_msg);
}

inline CodedResult sise2_turbo(const Vec& r, const ChannelModel& believed, double n0,
                               const SiseConfig& cfg, const Interleaver& il, int message_len,
                               int outer_iterations, RecordLevel lvl = RecordLevel::kNone,
                               const std::vector<int>* truth_msg = nullptr) {
    SiseConfig c = cfg;
    c.schedule = Schedule::SISE2;
    return turbo_run(r, believed, n0, c, il, message_len, outer_iterations, lvl, truth_msg);
}

}  // namespace sise
