#include "twrn/slot_model.hpp"

#include <map>

namespace twrn {

namespace {

enum class RelaySend { None, Native1, Native2, Coded, Pick };

// Encodes (delta, tx, success) into one ordering key so equal outcomes merge.
long outcome_key(const std::array<int, 4>& delta, int tx, int succ) {
    long k = 0;
    for (int d : delta) k = k * 3 + (d + 1);
    return (k * 2 + tx) * 3 + succ;
}

struct Accumulator {
    std::map<long, SlotOutcome> merged;

    void add(const std::array<int, 4>& delta, double prob, int tx, int succ) {
        if (prob <= 0.0) return;
        long key = outcome_key(delta, tx, succ);
        auto [it, fresh] = merged.try_emplace(key);
        if (fresh) {
            it->second.delta = delta;
            it->second.tx_count = tx;
            it->second.success_count = succ;
        }
        it->second.prob += prob;
    }
};

}  // namespace

std::vector<SlotOutcome> slot_outcomes(const NetworkState& state,
                                       const ProtocolParams& params,
                                       const std::optional<ArrivalRates>& arrivals) {
    if ((state.l1 && *state.l1 < 0) || (state.l2 && *state.l2 < 0) || state.k1 < 0 ||
        state.k2 < 0)
        throw InvalidStateError("negative buffer occupancy");
    const bool tracks_end_node = state.l1.has_value() || state.l2.has_value();
    if (tracks_end_node != arrivals.has_value())
        throw InvalidStateError(
            "arrival rates must be given exactly when an end-node buffer is tracked");

    // Attempt probabilities. A node with an empty tracked buffer stays quiet.
    const double p1 = state.node1_backlogged() ? params.g1 : 0.0;
    const double p2 = state.node2_backlogged() ? params.g2 : 0.0;

    const bool b1 = state.k1 > 0;
    const bool b2 = state.k2 > 0;
    double p_relay = 0.0;
    RelaySend send = RelaySend::None;
    if (b1 && b2) {
        p_relay = params.q;
        send = params.mode == Mode::NC ? RelaySend::Coded : RelaySend::Pick;
    } else if (b1) {
        p_relay = params.q1;
        send = RelaySend::Native1;
    } else if (b2) {
        p_relay = params.q2;
        send = RelaySend::Native2;
    }

    const double a1 = state.l1 ? arrivals->lam1 : 0.0;
    const double a2 = state.l2 ? arrivals->lam2 : 0.0;

    Accumulator acc;
    for (int t1 = 0; t1 < 2; ++t1) {
        const double w1 = t1 ? p1 : 1 - p1;
        if (w1 == 0.0) continue;
        for (int t2 = 0; t2 < 2; ++t2) {
            const double w2 = w1 * (t2 ? p2 : 1 - p2);
            if (w2 == 0.0) continue;
            for (int tr = 0; tr < 2; ++tr) {
                const double w3 = w2 * (tr ? p_relay : 1 - p_relay);
                if (w3 == 0.0) continue;
                // NonNC relay with both buffers busy forwards the head of one
                // buffer chosen uniformly at random.
                const int picks = (tr && send == RelaySend::Pick) ? 2 : 1;
                for (int pick = 1; pick <= picks; ++pick) {
                    const double w4 = w3 / picks;
                    std::array<int, 4> base{};
                    int succ = 0;
                    // Uplink: the relay receives node i's packet iff i alone
                    // transmitted and the relay itself stayed quiet.
                    if (t1 && !t2 && !tr) {
                        base[CoordK1] += 1;
                        if (state.l1) base[CoordL1] -= 1;
                    }
                    if (t2 && !t1 && !tr) {
                        base[CoordK2] += 1;
                        if (state.l2) base[CoordL2] -= 1;
                    }
                    // Downlink: a constituent reaches its destination iff that
                    // end node is not transmitting this slot.
                    if (tr) {
                        const bool from1 =
                            send == RelaySend::Coded || send == RelaySend::Native1 ||
                            (send == RelaySend::Pick && pick == 1);
                        const bool from2 =
                            send == RelaySend::Coded || send == RelaySend::Native2 ||
                            (send == RelaySend::Pick && pick == 2);
                        if (from1 && !t2) {
                            base[CoordK1] -= 1;
                            ++succ;
                        }
                        if (from2 && !t1) {
                            base[CoordK2] -= 1;
                            ++succ;
                        }
                    }
                    // Late arrivals after all departures are resolved.
                    for (int n1 = 0; n1 < 2; ++n1) {
                        const double w5 = w4 * (n1 ? a1 : 1 - a1);
                        if (w5 == 0.0) continue;
                        for (int n2 = 0; n2 < 2; ++n2) {
                            const double w6 = w5 * (n2 ? a2 : 1 - a2);
                            if (w6 == 0.0) continue;
                            std::array<int, 4> d = base;
                            d[CoordL1] += n1;
                            d[CoordL2] += n2;
                            acc.add(d, w6, tr, succ);
                        }
                    }
                }
            }
        }
    }

    std::vector<SlotOutcome> out;
    out.reserve(acc.merged.size());
    for (auto& [key, o] : acc.merged) out.push_back(o);
    return out;
}

SlotRates slot_rates(const NetworkState& state, const ProtocolParams& params,
                     const std::optional<ArrivalRates>& arrivals) {
    SlotRates r;
    for (const SlotOutcome& o : slot_outcomes(state, params, arrivals)) {
        r.tx += o.prob * o.tx_count;
        r.success += o.prob * o.success_count;
    }
    return r;
}

}  // namespace twrn
