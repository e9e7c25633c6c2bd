#include "twrn/oracle.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <deque>
#include <map>

namespace twrn {

namespace {

long ipow(long base, int e) {
    long v = 1;
    for (int i = 0; i < e; ++i) v *= base;
    return v;
}

}  // namespace

long TruncatedChain::index(const NetworkState& s) const {
    const long side = cap + 1;
    if (unsaturated)
        return ((s.l1.value() * side + s.k1) * side + s.k2) * side + s.l2.value();
    return s.k1 * side + s.k2;
}

NetworkState TruncatedChain::state(long idx) const {
    const long side = cap + 1;
    if (unsaturated) {
        const long l2 = idx % side;
        idx /= side;
        const long k2 = idx % side;
        idx /= side;
        const long k1 = idx % side;
        idx /= side;
        return NetworkState::unsaturated(idx, k1, k2, l2);
    }
    return NetworkState::saturated(idx / side, idx % side);
}

TruncatedChain build_truncated(const ProtocolParams& raw,
                               std::optional<ArrivalRates> arrivals, int cap,
                               std::size_t max_states) {
    if (cap < 1) throw ValidationError("truncation cap must be at least 1");
    TruncatedChain chain;
    auto [params, arr] = validate_params(raw, arrivals);
    chain.params = params;
    chain.arrivals = arr;
    chain.cap = cap;
    chain.unsaturated = arr.has_value();

    const long side = cap + 1;
    const long n = ipow(side, chain.unsaturated ? 4 : 2);
    if (static_cast<std::size_t>(n) > max_states)
        throw SizeError("state space of " + std::to_string(n) +
                        " states exceeds the budget; reduce the cap");

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * 12);
    for (long idx = 0; idx < n; ++idx) {
        const NetworkState s = chain.state(idx);
        for (const SlotOutcome& o : slot_outcomes(s, params, arr)) {
            NetworkState t = s;
            auto move = [&](long& coord, int d) {
                coord += d;
                if (coord > cap) coord = cap;  // reflecting cap
            };
            if (t.l1) move(*t.l1, o.delta[CoordL1]);
            if (t.l2) move(*t.l2, o.delta[CoordL2]);
            move(t.k1, o.delta[CoordK1]);
            move(t.k2, o.delta[CoordK2]);
            trips.emplace_back(idx, chain.index(t), o.prob);
        }
    }
    chain.P.resize(n, n);
    chain.P.setFromTriplets(trips.begin(), trips.end());
    return chain;
}

Eigen::VectorXd solve_truncated(const TruncatedChain& chain) {
    const long n = chain.state_count();

    // Restrict to the states reachable from the all-empty start; anything
    // else carries no stationary mass (and may form separate classes).
    std::vector<long> compact(n, -1);
    std::vector<long> order;
    order.reserve(n);
    std::deque<long> frontier{0};
    compact[0] = 0;
    order.push_back(0);
    while (!frontier.empty()) {
        const long u = frontier.front();
        frontier.pop_front();
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(chain.P, u);
             it; ++it) {
            if (it.value() > 0 && compact[it.col()] < 0) {
                compact[it.col()] = static_cast<long>(order.size());
                order.push_back(it.col());
                frontier.push_back(it.col());
            }
        }
    }
    const long nr = static_cast<long>(order.size());

    // pi (P - I) = 0 with one equation replaced by normalization.
    std::vector<Eigen::Triplet<double>> trips;
    for (long u = 0; u < n; ++u) {
        if (compact[u] < 0) continue;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(chain.P, u);
             it; ++it) {
            if (compact[it.col()] < 0) continue;
            if (compact[it.col()] == 0) continue;  // replaced equation
            trips.emplace_back(compact[it.col()], compact[u], it.value());
        }
        if (compact[u] != 0) trips.emplace_back(compact[u], compact[u], -1.0);
        trips.emplace_back(0, compact[u], 1.0);  // normalization row
    }
    Eigen::SparseMatrix<double> sys(nr, nr);
    sys.setFromTriplets(trips.begin(), trips.end());
    sys.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(sys);
    lu.factorize(sys);
    if (lu.info() != Eigen::Success)
        throw DecompositionError("global balance system is singular (reducible chain?)");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nr);
    rhs(0) = 1.0;
    Eigen::VectorXd x = lu.solve(rhs);
    if (!x.allFinite())
        throw DecompositionError("global balance solve diverged");

    Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
    for (long i = 0; i < nr; ++i) {
        double v = x(i);
        if (v < 0) {
            if (v < -1e-9) throw DecompositionError("negative stationary mass");
            v = 0;
        }
        pi(order[i]) = v;
    }
    pi /= pi.sum();

    const double defect = (chain.P.transpose() * pi - pi).cwiseAbs().maxCoeff();
    if (defect > 1e-10)
        throw DecompositionError("stationary defect " + std::to_string(defect));
    return pi;
}

Metrics oracle_metrics(const TruncatedChain& chain, const Eigen::VectorXd& pi) {
    Metrics m;
    m.provenance = Provenance::Oracle;
    // Attempt/delivery rates depend only on which buffers are busy.
    std::map<int, SlotRates> rate_cache;
    for (long idx = 0; idx < chain.state_count(); ++idx) {
        const double mass = pi(idx);
        if (mass == 0.0) continue;
        const NetworkState s = chain.state(idx);
        const int sig = (s.k1 > 0) | ((s.k2 > 0) << 1) |
                        (s.node1_backlogged() << 2) | (s.node2_backlogged() << 3);
        auto it = rate_cache.find(sig);
        if (it == rate_cache.end())
            it = rate_cache.emplace(sig, slot_rates(s, chain.params, chain.arrivals))
                     .first;
        m.P += mass * it->second.tx;
        m.S += mass * it->second.success;
        m.N_R += mass * static_cast<double>(s.k1 + s.k2);
        if (s.k1 > 0 && s.k2 > 0)
            m.split.both += mass;
        else if (s.k1 > 0)
            m.split.only1 += mass;
        else if (s.k2 > 0)
            m.split.only2 += mass;
        else
            m.split.both_empty += mass;
    }
    if (m.S > 0) {
        m.D = m.N_R / m.S;
    } else if (m.N_R > 1e-12) {
        throw UndefinedDelayError("backlogged relay with zero throughput");
    } else {
        m.D = 0.0;
    }
    return m;
}

}  // namespace twrn
