#pragma once

#include <memory>

#include "sise/mmse.hpp"
#include "sise/trellis.hpp"

namespace sise {

enum class EqKind { LE, DFE, BIDFE, MAP };

inline EqKind eq_kind_from_string(std::string_view s) {
    if (s == "le") return EqKind::LE;
    if (s == "dfe") return EqKind::DFE;
    if (s == "bidfe") return EqKind::BIDFE;
    if (s == "map") return EqKind::MAP;
    throw std::invalid_argument("unknown equalizer kind '" + std::string(s) + "'");
}

/// One constituent SISO equalizer: kind, tap-update discipline and spans.
/// For the LE, lc/lf are the causal/anticausal feedforward spans; for the
/// DFE and BiDFE, lf is the (anticausal) feedforward span and ld the
/// feedback span.
struct EqualizerSpec {
    EqKind kind = EqKind::LE;
    FilterMode mode = FilterMode::QTI;
    int lc = 0;
    int lf = 0;
    int ld = -1;            // default: channel memory
    int window = 15;        // BiDFE arbitration window
};

struct SisoOutput {
    Vec extrinsic;
    std::vector<int> hard;  // +-1 decisions
};

/// Runs one equalizer pass: extrinsic LLRs given the received sequence and
/// a-priori LLRs.  QTI taps are redesigned once per call (one iteration
/// stage); TI taps are designed once at construction; TV per symbol.
class SisoEqualizer {
public:
    SisoEqualizer(const EqualizerSpec& spec, const ChannelModel& believed, double n0)
        : spec_(spec), ch_(believed), n0_(n0) {
        const int ld = spec.ld >= 0 ? spec.ld : ch_.memory();
        spec_.ld = ld;
        switch (spec_.kind) {
            case EqKind::LE:
                cm_ = build_channel_matrix(ch_, spec_.lc, spec_.lf);
                if (spec_.mode == FilterMode::TI) le_ = design_le_qti(cm_, 1.0, n0_, FilterMode::TI);
                break;
            case EqKind::DFE:
                cm_ = build_channel_matrix(ch_, 0, spec_.lf, ld);
                if (spec_.mode == FilterMode::TI)
                    dfe_ = design_dfe_qti(cm_, 1.0, n0_, FilterMode::TI);
                break;
            case EqKind::BIDFE:
                bidfe_cfg_ = BiDfeConfig{spec_.lf, ld, spec_.window, spec_.mode};
                break;
            case EqKind::MAP:
                if (ch_.memory() > 10)
                    throw std::invalid_argument("MAP equalizer: channel memory above 10");
                break;
        }
    }

    const EqualizerSpec& spec() const { return spec_; }

    SisoOutput run(const Vec& r, const Vec& a_priori) const {
        switch (spec_.kind) {
            case EqKind::LE: return run_le(r, a_priori);
            case EqKind::DFE: return run_dfe(r, a_priori);
            case EqKind::BIDFE: return run_bidfe(r, a_priori);
            case EqKind::MAP: return run_map(r, a_priori);
        }
        throw std::logic_error("unreachable");
    }

private:
    static std::vector<int> posterior_hard(const Vec& extrinsic, const Vec& a_priori) {
        std::vector<int> hard(extrinsic.size());
        for (std::size_t i = 0; i < extrinsic.size(); ++i)
            hard[i] = (extrinsic[i] + a_priori[i] >= 0.0) ? +1 : -1;
        return hard;
    }

    SisoOutput run_le(const Vec& r, const Vec& a_priori) const {
        const SymbolPriors priors = priors_from_llr(a_priori);
        EqualizedFrame frame;
        double beta = 0.0;
        if (spec_.mode == FilterMode::TV) {
            frame = le_equalize_tv(r, cm_, priors, n0_);
        } else {
            const LeFilter f = spec_.mode == FilterMode::TI
                                   ? le_
                                   : design_le_qti(cm_, priors.z_bar, n0_);
            frame = le_equalize(r, f, cm_, priors, n0_);
            beta = f.beta;
        }
        SisoOutput out;
        out.extrinsic = le_extrinsic(frame, beta);
        out.hard = posterior_hard(out.extrinsic, a_priori);
        return out;
    }

    SisoOutput run_dfe(const Vec& r, const Vec& a_priori) const {
        const DfeFilter f = spec_.mode == FilterMode::TI ? dfe_
                            : spec_.mode == FilterMode::QTI
                                ? design_dfe_qti(cm_, priors_from_llr(a_priori).z_bar, n0_)
                                : DfeFilter{{}, {}, 0.0, FilterMode::TV};
        EqualizedFrame frame = dfe_equalize(r, f, cm_, a_priori, n0_);
        SisoOutput out;
        out.extrinsic = std::move(frame.extrinsic);
        out.hard = std::move(frame.hard);
        return out;
    }

    SisoOutput run_bidfe(const Vec& r, const Vec& a_priori) const {
        BiDfeOut b = bidfe_equalize(r, ch_, a_priori, n0_, bidfe_cfg_);
        SisoOutput out;
        out.extrinsic = std::move(b.extrinsic);
        out.hard = std::move(b.hard);
        return out;
    }

    SisoOutput run_map(const Vec& r, const Vec& a_priori) const {
        SisoOutput out;
        out.extrinsic = bcjr_equalize(r, ch_, a_priori, n0_);
        out.hard = posterior_hard(out.extrinsic, a_priori);
        return out;
    }

    EqualizerSpec spec_;
    ChannelModel ch_;
    double n0_;
    ChannelMatrix cm_;
    LeFilter le_;
    DfeFilter dfe_;
    BiDfeConfig bidfe_cfg_;
};

}  // namespace sise
