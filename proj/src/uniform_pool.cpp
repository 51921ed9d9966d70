#include "poolsim/uniform_pool.hpp"

#include <algorithm>
#include <cmath>

namespace poolsim {

namespace {

// Full personal or full pool exits are detected with this slack so that a
// withdrawal computed as share*quantities from a decimal log still counts
// as "all of it".
constexpr double kShareTol = 1e-9;

} // namespace

bool UniformPoolState::empty() const {
    return std::all_of(q.begin(), q.end(), [](double x) { return x == 0.0; });
}

UniformPoolState make_uniform_pool(CfmmSpec spec, FeeParams fees, Vec initial_q,
                                   const std::string& initial_lp) {
    validate_fee_params(fees);
    std::size_t n = spec.n_assets();
    if (initial_q.empty()) initial_q = vec::zeros(n);
    if (initial_q.size() != n) fail(Errc::dimension_mismatch, "initial quantities");

    UniformPoolState state;
    state.spec = std::move(spec);
    state.fees = fees;
    state.q = initial_q;
    state.q_nofee = initial_q;
    state.cumulative_lp_fees = vec::zeros(n);
    state.treasury = vec::zeros(n);
    if (!state.empty()) {
        if (!vec::all_positive(initial_q))
            fail(Errc::non_positive_quantity, "initial reserves must be all positive or all zero");
        state.depth = invariant(state.spec, state.q);
        state.lp_shares[initial_lp] = 1.0;
        state.lp_accrued_fees[initial_lp] = vec::zeros(n);
    }
    return state;
}

TradeResult apply_trade(const UniformPoolState& state, const ValidatedTrade& trade,
                        const FeeParams* fee_override) {
    if (state.empty()) fail(Errc::insolvent_trade, "trade against an empty pool");
    const FeeParams fees = fee_override ? *fee_override : state.fees;
    validate_fee_params(fees);

    std::size_t n = state.n_assets();
    std::size_t k = trade.event.solve_for.pos();

    // Fee-free solve on live reserves, then Eq-9 style gross-up on inbound.
    double solved_k = solve_trade(state.spec, state.q, trade.event.deltas, trade.event.solve_for);
    Vec solved = trade.event.deltas;
    solved[k] = solved_k;

    Vec executed(n), lp_fee(n), treasury_fee(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (solved[i] > 0.0) {
            executed[i] = solved[i] / (1.0 - fees.gamma);
            double total_fee = fees.gamma * executed[i];
            lp_fee[i] = (1.0 - fees.phi) * total_fee;
            treasury_fee[i] = fees.phi * total_fee;
        } else {
            executed[i] = solved[i];
            lp_fee[i] = 0.0;
            treasury_fee[i] = 0.0;
        }
    }

    TradeResult result{state, FeeAccrual{lp_fee, treasury_fee}, executed, solved};
    UniformPoolState& next = result.state;
    for (std::size_t i = 0; i < n; ++i) {
        // Inbound gross amount minus the treasury cut stays in reserves,
        // i.e. reserves advance by the fee-free delta plus the LP fee.
        next.q[i] = state.q[i] + solved[i] + lp_fee[i];
        next.q_nofee[i] = state.q_nofee[i] + solved[i];
        next.cumulative_lp_fees[i] = state.cumulative_lp_fees[i] + lp_fee[i];
        next.treasury[i] = state.treasury[i] + treasury_fee[i];
        if (!(next.q[i] > 0.0)) fail(Errc::insolvent_trade, "trade drains asset " + std::to_string(i + 1));
    }
    next.depth = invariant(next.spec, next.q);

    // Accrual records outlive an LP's exit, so look the share up defensively.
    for (auto& [lp, accrued] : next.lp_accrued_fees) {
        auto it = next.lp_shares.find(lp);
        if (it == next.lp_shares.end()) continue;
        for (std::size_t i = 0; i < n; ++i) accrued[i] += it->second * lp_fee[i];
    }
    return result;
}

UniformPoolState apply_quote(const UniformPoolState& state, const ValidatedQuote& quote) {
    UniformPoolState next = state;
    std::size_t n = state.n_assets();
    const std::string& lp = quote.event.lp_id;

    if (quote.bootstrap) {
        if (!state.empty()) fail(Errc::bad_config, "bootstrap quote against a live pool");
        next.q = quote.event.deltas;
        next.q_nofee = quote.event.deltas;
        next.depth = invariant(next.spec, next.q);
        next.lp_shares = {{lp, 1.0}};
        next.lp_accrued_fees[lp] = vec::zeros(n);
        return next;
    }

    double alpha = quote.alpha;
    double held = 0.0;
    if (auto it = state.lp_shares.find(lp); it != state.lp_shares.end()) held = it->second;

    if (!quote.is_provide) {
        if (held == 0.0) fail(Errc::unknown_lp, "withdrawal by unknown LP '" + lp + "'");
        if (-alpha > held * (1.0 + kShareTol) + 1e-15)
            fail(Errc::overdraw, "withdrawal exceeds holdings of LP '" + lp + "'");
        if (-alpha > held * (1.0 - kShareTol)) alpha = -held; // full personal exit
    }

    if (1.0 + alpha <= kShareTol) {
        // Last LP withdrawing everything empties the pool.
        if (std::abs(held - 1.0) > kShareTol)
            fail(Errc::overdraw, "withdrawal would drain a shared pool");
        next.q = vec::zeros(n);
        next.q_nofee = vec::zeros(n);
        next.depth = Depth{0.0};
        next.lp_shares.clear();
        return next;
    }

    next.q = vec::add(state.q, quote.event.deltas);
    // The shadow ledger advances by the same flows; accrued fees stay put.
    next.q_nofee = vec::add(state.q_nofee, quote.event.deltas);
    next.depth = depth_after_quote(next.spec, state.q, quote.event.deltas);

    // Share bookkeeping from quantity fractions: a proportional flow of
    // alpha*Q moves the quoting LP to (r + alpha)/(1 + alpha) and scales
    // everyone else by 1/(1 + alpha).
    for (auto& [id, share] : next.lp_shares) share /= (1.0 + alpha);
    double updated = (held + alpha) / (1.0 + alpha);
    if (updated <= kShareTol) {
        next.lp_shares.erase(lp);
    } else {
        next.lp_shares[lp] = updated;
        if (!next.lp_accrued_fees.count(lp)) next.lp_accrued_fees[lp] = vec::zeros(n);
    }
    return next;
}

Vec lp_fee_share(const UniformPoolState& state, const std::string& lp_id) {
    auto it = state.lp_accrued_fees.find(lp_id);
    if (it == state.lp_accrued_fees.end()) fail(Errc::unknown_lp, "no such LP '" + lp_id + "'");
    return it->second;
}

} // namespace poolsim
