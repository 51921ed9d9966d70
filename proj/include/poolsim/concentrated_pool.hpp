// Concentrated liquidity: tick grid, ranged LP positions, virtual-pool
// construction and multi-segment trade execution with per-range fee
// attribution.
//
// The data model is generic in N (an N-asset pool has an (N-1)-dimensional
// tick grid), but virtualization and trade execution are implemented for
// two-asset constant-product pools and reject anything else with
// UnsupportedSpec.
#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "poolsim/core.hpp"

namespace poolsim {

// Price grid: for each adjacent asset pair (n, n+1) a strictly increasing
// vector of at least two positive tick prices Z_{n,n+1}.
struct TickGrid {
    std::vector<Vec> dims;

    std::size_t n_dims() const { return dims.size(); }
    std::size_t n_assets() const { return dims.size() + 1; }
    // Unit ranges along dimension d.
    int n_ranges(std::size_t d) const { return static_cast<int>(dims[d].size()) - 1; }
};

TickGrid make_tick_grid(std::vector<Vec> dims);
// Geometric spacing: ticks min, min*ratio, ... capped at max (max included
// exactly when it lands on the progression within 1e-9).
TickGrid make_geometric_grid(double min_price, double max_price, double ratio);

// Half-open (lower, upper] price range; bounds stored as tick indices so a
// range is on-grid by construction.
struct PriceRange {
    // per dimension: (lower tick index, upper tick index), lower < upper
    std::vector<std::pair<int, int>> bounds;

    bool contains_unit(const std::vector<int>& unit_lower) const;
};

PriceRange make_price_range(const TickGrid& grid, const Vec& lower_prices, const Vec& upper_prices);

struct LpPosition {
    std::string lp_id;
    PriceRange range;
    Vec quantities;        // current real holdings, token units
    Vec uncollected_fees;  // accrued, not compounded
};

enum class Boundary { none, lower, upper };

struct TradeSegment {
    int range_index{0};  // unit range (lower tick index), dimension 0
    double beta{0.0};
    Vec executed;  // gross deltas incl. fee gross-up
    Vec solved;    // fee-free deltas that moved the virtual reserves
    Vec lp_fees;   // lambda_m
    Boundary boundary{Boundary::none};
    // real quantity of the depleted asset when a bound is hit (diagnostic)
    double boundary_residual{0.0};
};

// Eq-17 style aggregation: an LP's full quantities count toward every unit
// range its range contains.
Vec range_quantities(const std::vector<LpPosition>& positions, const TickGrid& grid,
                     const std::vector<int>& unit_lower);

// LP's share of the liquidity in one unit range; EmptyRange when nothing
// covers it.
double range_share(const std::vector<LpPosition>& positions, const TickGrid& grid,
                   const std::string& lp_id, const std::vector<int>& unit_lower);

// Unit range holding each spot price: Z^l < Z <= Z^{l+1} per dimension.
std::vector<int> find_active_range(const TickGrid& grid, const Vec& spot_per_dim);

// Two-asset constant-product virtual reserves over (z_lo, z_hi]:
//   q1v = q1 + sqrt(Kv / z_hi),  q2v = q2 + sqrt(Kv * z_lo)
// The assignment makes real reserves hit zero exactly at the range bounds.
Vec virtualize(const Vec& real_q, double z_lo, double z_hi, double virtual_depth);

// Kv such that virtualize(real_q, ...) satisfies q1v*q2v = Kv.
double virtual_depth_from_quantities(const Vec& real_q, double z_lo, double z_hi);

// Real amounts a position must hold per unit of sqrt(Kv) so the pool is
// consistent at spot price z (helper for building well-formed pools).
Vec position_quantities_for_price(double z_lo, double z_hi, double sqrt_depth, double spot);

// ---------------------------------------------------------------------------
// Two-asset concentrated pool
// ---------------------------------------------------------------------------

struct ActiveRangeState {
    int index{0};       // lower tick index of the active unit range
    Vec virtual_q;      // q^v
    double virtual_depth{0.0};
    Vec real_q;         // real in-range quantities
};

struct ClPoolState {
    TickGrid grid;
    FeeParams fees;
    std::vector<LpPosition> positions;

    double spot{0.0};  // Z_{1,2}
    ActiveRangeState active;

    Vec cumulative_lp_fees;
    Vec treasury;
    // Monotone per-LP fee history (survives withdrawal payouts).
    std::map<std::string, Vec> lp_cumulative_fees;

    std::size_t n_assets() const { return 2; }
    // Sum of all position holdings (the pool's fee-free reserves).
    Vec total_real_quantities() const;
    std::vector<Vec> spot_matrix() const;
};

// initial_spot <= 0 means "derive from the positions": the highest unit
// range whose aggregated quantities imply an in-range price becomes active.
ClPoolState make_cl_pool(TickGrid grid, FeeParams fees, std::vector<LpPosition> positions,
                         double initial_spot = 0.0);

struct CrossingControl {
    double beta{1.0};
    Boundary boundary{Boundary::none};
};

// Smallest beta in (0,1] at which the instantaneous price reaches an
// active-range bound; beta = 1 / none when the trade completes in-range.
CrossingControl solve_crossing_control(const ClPoolState& state, const ValidatedTrade& trade);

struct ClTradeResult {
    ClPoolState state;
    std::vector<TradeSegment> segments;
    std::map<std::string, Vec> lp_fees;  // per-LP payout of this trade
    Vec executed;                        // gross totals
    Vec solved;                          // fee-free totals
};

ClTradeResult execute_trade(const ClPoolState& state, const ValidatedTrade& trade,
                            const FeeParams* fee_override = nullptr);

// Proportional provide/withdraw against the LP's own positions; withdrawal
// pays out that LP's uncollected fees in full.
ClPoolState apply_cl_quote(const ClPoolState& state, const ValidatedQuote& quote);

} // namespace poolsim
