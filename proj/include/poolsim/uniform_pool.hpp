// Full-range pool state machine: trades with fee gross-up and depth growth,
// proportional quotes with share bookkeeping, fee distribution to LPs and
// the protocol treasury.
#pragma once

#include <map>
#include <string>

#include "poolsim/cfmm.hpp"
#include "poolsim/core.hpp"

namespace poolsim {

struct TradeResult;

// All apply_* members return new values; a state is never mutated in place.
struct UniformPoolState {
    CfmmSpec spec;
    FeeParams fees;

    // Live reserves include every LP fee accrued so far; the shadow vector
    // excludes them (live == shadow + cumulative_lp_fees componentwise).
    Vec q;
    Vec q_nofee;
    Depth depth{0.0};

    // lp_id -> pool share; shares sum to 1 whenever any LP exists.
    std::map<std::string, double> lp_shares;
    // lambda_[t..T]: LP fees accrued since inception.
    Vec cumulative_lp_fees;
    // Per-LP fee entitlement integrated over the LP's share trajectory.
    std::map<std::string, Vec> lp_accrued_fees;
    // Protocol fees held outside reserves.
    Vec treasury;

    std::size_t n_assets() const { return q.size(); }
    bool empty() const;
};

struct TradeResult {
    UniformPoolState state;
    FeeAccrual fees;
    // What actually moved between trader and pool+treasury (gross of fees).
    Vec executed;
    // Fee-free solved deltas (what moved the invariant).
    Vec solved;
};

// A pool seeded with initial reserves owned by a single LP; initial_q may be
// empty (all zeros) for a pool bootstrapped by the first quote.
UniformPoolState make_uniform_pool(CfmmSpec spec, FeeParams fees, Vec initial_q,
                                   const std::string& initial_lp = "lp0");

// Solve the trade fee-free on live reserves, gross up inbound legs by
// 1/(1-gamma), split the fee into LP and treasury portions, advance both
// reserve ledgers and recompute the depth.
// fee_override replaces the pool's fee parameters for this trade only
// (used for fee-free arbitrage injection).
TradeResult apply_trade(const UniformPoolState& state, const ValidatedTrade& trade,
                        const FeeParams* fee_override = nullptr);

UniformPoolState apply_quote(const UniformPoolState& state, const ValidatedQuote& quote);

// Fees earned by one LP, integrated over its share trajectory.
Vec lp_fee_share(const UniformPoolState& state, const std::string& lp_id);

} // namespace poolsim
