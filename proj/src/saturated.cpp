#include "twrn/saturated.hpp"

#include <cmath>

namespace twrn {

QbdBlocks build_distributed_chain(const DistributedChainSpec& spec) {
    if (spec.own_buffer != 1 && spec.own_buffer != 2)
        throw ValidationError("own_buffer must be 1 or 2");
    auto [params, none] = validate_params(spec.params);
    CappedChainSpec c;
    c.own_coord = spec.own_buffer == 1 ? CoordK1 : CoordK2;
    c.clipped = {{spec.own_buffer == 1 ? CoordK2 : CoordK1, spec.r_other}};
    c.m = spec.m;
    c.params = params;
    c.present = {false, true, true, false};
    return build_capped_chain(c);
}

double conditional_probability(const QbdSolution& sol, int m) {
    Eigen::RowVectorXd at_cap = sol.pi1;
    for (int i = 1; i < m - 1; ++i) at_cap = at_cap * sol.R;
    const double num = at_cap.sum();
    const double den = tail_mass(sol, m - 1).sum();
    if (!(den > 0.0) || !std::isfinite(den)) return 1.0;
    const double r = num / den;
    return std::min(1.0, std::max(0.0, r));
}

FixedPointResult fixed_point(const ProtocolParams& raw, int m, double tol,
                             int max_iter, double r_init) {
    auto [params, none] = validate_params(raw);
    if (params.mode != Mode::NC)
        throw UnsupportedModeError("the saturated fixed point is NC-specific");
    if (m < 2) throw ValidationError("phase cap m must be at least 2");

    FixedPointResult res;
    res.params = params;
    res.m = m;
    res.r1 = r_init;
    res.r2 = r_init;

    auto solve_chain = [&](int own, double r_other) {
        DistributedChainSpec spec;
        spec.own_buffer = own;
        spec.m = m;
        spec.r_other = r_other;
        spec.params = params;
        try {
            return solve_qbd(build_distributed_chain(spec));
        } catch (const QbdInstabilityError&) {
            throw UnstableChainError("virtual buffer " + std::to_string(own) +
                                         " is saturated",
                                     "MC" + std::to_string(own));
        } catch (const UnstableChainError&) {
            throw UnstableChainError("virtual buffer " + std::to_string(own) +
                                         " is saturated",
                                     "MC" + std::to_string(own));
        }
    };

    for (int it = 1; it <= max_iter; ++it) {
        res.sol1 = solve_chain(1, res.r2);
        const double r1_new = conditional_probability(res.sol1, m);
        res.sol2 = solve_chain(2, r1_new);
        const double r2_new = conditional_probability(res.sol2, m);
        const double delta =
            std::max(std::abs(r1_new - res.r1), std::abs(r2_new - res.r2));
        res.r1 = r1_new;
        res.r2 = r2_new;
        res.iterations = it;
        res.final_delta = delta;
        res.delta_history.push_back(delta);
        if (delta < tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

Metrics metrics(const FixedPointResult& result, const CoefficientSet& c) {
    const Eigen::RowVectorXd busy = tail_mass(result.sol1, 1);
    Metrics m;
    m.split.both_empty = result.sol1.pi0(0);
    m.split.only2 = result.sol1.pi0.sum() - m.split.both_empty;
    m.split.only1 = busy(0);
    m.split.both = busy.sum() - m.split.only1;

    const ProtocolParams& p = result.params;
    m.P = m.split.only1 * p.q1 + m.split.only2 * p.q2 + m.split.both * p.q;
    m.S = m.split.only1 * c.mu11 + m.split.only2 * c.mu22 +
          m.split.both * (c.mu1 + c.mu2 + 2 * c.mu);
    m.N_R = expected_level(result.sol1) + expected_level(result.sol2);
    if (m.S > 0) {
        m.D = m.N_R / m.S;
    } else if (m.N_R > 1e-12) {
        throw UndefinedDelayError("backlogged relay with zero throughput");
    } else {
        m.D = 0.0;
    }
    m.provenance = Provenance::Analytic;
    return m;
}

}  // namespace twrn
