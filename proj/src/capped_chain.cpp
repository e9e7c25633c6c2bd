#include "twrn/capped_chain.hpp"

namespace twrn {

using Eigen::MatrixXd;

int phase_count(const CappedChainSpec& spec) {
    int p = 1;
    for (std::size_t i = 0; i < spec.clipped.size(); ++i) p *= spec.m;
    return p;
}

int phase_digit(const CappedChainSpec& spec, int phase, int clipped_index) {
    for (int i = 0; i < clipped_index; ++i) phase /= spec.m;
    return phase % spec.m;
}

namespace {

void check_spec(const CappedChainSpec& spec) {
    if (spec.m < 2) throw ValidationError("phase cap m must be at least 2");
    if (!spec.present[spec.own_coord])
        throw ValidationError("level coordinate is not part of the model");
    for (const ClippedCoord& c : spec.clipped) {
        if (!spec.present[c.coord] || c.coord == spec.own_coord)
            throw ValidationError("clipped coordinate set is inconsistent");
        if (!(c.r >= 0.0 && c.r <= 1.0))
            throw ValidationError("conditional probability r out of [0,1]");
    }
}

NetworkState make_state(const CappedChainSpec& spec, long own_value,
                        const std::vector<int>& digits) {
    std::array<std::optional<long>, 4> v{};
    for (int c = 0; c < 4; ++c)
        if (spec.present[c]) v[c] = 0;
    v[spec.own_coord] = own_value;
    for (std::size_t i = 0; i < spec.clipped.size(); ++i)
        v[spec.clipped[i].coord] = digits[i];

    NetworkState s;
    s.l1 = v[CoordL1];
    s.l2 = v[CoordL2];
    s.k1 = v[CoordK1].value_or(0);
    s.k2 = v[CoordK2].value_or(0);
    return s;
}

}  // namespace

NetworkState representative_state(const CappedChainSpec& spec, int level_class,
                                  int phase) {
    std::vector<int> digits(spec.clipped.size());
    for (std::size_t i = 0; i < digits.size(); ++i)
        digits[i] = phase_digit(spec, phase, static_cast<int>(i));
    return make_state(spec, level_class, digits);
}

QbdBlocks build_capped_chain(const CappedChainSpec& spec) {
    check_spec(spec);
    const int P = phase_count(spec);
    const int nclip = static_cast<int>(spec.clipped.size());

    QbdBlocks b;
    b.B00 = MatrixXd::Zero(P, P);
    b.B01 = MatrixXd::Zero(P, P);
    b.A0 = MatrixXd::Zero(P, P);
    b.A1 = MatrixXd::Zero(P, P);
    b.A2 = MatrixXd::Zero(P, P);

    std::vector<int> digits(nclip);
    std::vector<int> scales(nclip);
    for (int i = 0; i < nclip; ++i) scales[i] = (i == 0) ? 1 : scales[i - 1] * spec.m;

    // Branch expansion of one outcome over the clipped coordinates: each cap
    // decrement forks into (m-2, r) and (m-1, 1-r).
    std::vector<std::pair<int, double>> targets, next;
    for (int level_class = 0; level_class <= 1; ++level_class) {
        for (int phase = 0; phase < P; ++phase) {
            for (int i = 0; i < nclip; ++i) digits[i] = phase_digit(spec, phase, i);
            const NetworkState state = make_state(spec, level_class, digits);
            const auto outcomes = slot_outcomes(state, spec.params, spec.arrivals);
            for (const SlotOutcome& o : outcomes) {
                const int d_own = o.delta[spec.own_coord];
                targets.assign(1, {0, o.prob});
                for (int i = 0; i < nclip; ++i) {
                    const int d = o.delta[spec.clipped[i].coord];
                    const int base = digits[i];
                    next.clear();
                    for (const auto& [tgt, w] : targets) {
                        if (base == spec.m - 1 && d < 0) {
                            const double r = spec.clipped[i].r;
                            if (r > 0.0)
                                next.emplace_back(tgt + (spec.m - 2) * scales[i], w * r);
                            if (r < 1.0)
                                next.emplace_back(tgt + (spec.m - 1) * scales[i], w * (1 - r));
                        } else {
                            int digit = base + d;
                            if (base == spec.m - 1 && d > 0) digit = spec.m - 1;
                            next.emplace_back(tgt + digit * scales[i], w);
                        }
                    }
                    targets.swap(next);
                }
                for (const auto& [tgt, w] : targets) {
                    if (level_class == 0) {
                        if (d_own < 0)
                            throw InvalidStateError("decrement out of the empty level");
                        (d_own == 0 ? b.B00 : b.B01)(phase, tgt) += w;
                    } else {
                        (d_own < 0 ? b.A2 : d_own == 0 ? b.A1 : b.A0)(phase, tgt) += w;
                    }
                }
            }
        }
    }
    // Transition rates out of level 1 equal those of any busy level, so the
    // level-1 -> level-0 block coincides with A2.
    b.B10 = b.A2;
    validate_blocks(b);
    return b;
}

}  // namespace twrn
