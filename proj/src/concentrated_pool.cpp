#include "poolsim/concentrated_pool.hpp"

#include <algorithm>
#include <cmath>

namespace poolsim {

namespace {

constexpr double kBetaTol = 1e-12;
// Relative mismatch allowed between a rebuilt range's implied price and the
// tick it is entered at.
constexpr double kEntryTol = 1e-6;

void check_two_assets(std::size_t n) {
    if (n != 2) fail(Errc::unsupported_spec, "concentrated execution supports two-asset pools only");
}

double tick_at(const TickGrid& grid, int idx) { return grid.dims[0][static_cast<std::size_t>(idx)]; }

struct RangeBuild {
    double sqrt_depth{0.0};
    Vec virtual_q;
    double implied_spot{0.0};
};

// Solve (q1 + s/sqrt(z_hi)) * (q2 + s*sqrt(z_lo)) = s^2 for s = sqrt(Kv).
double sqrt_depth_from_quantities(const Vec& q, double z_lo, double z_hi) {
    double a = 1.0 / std::sqrt(z_hi);
    double b = std::sqrt(z_lo);
    double one_minus_ab = 1.0 - a * b;  // = 1 - sqrt(z_lo/z_hi) > 0
    double cross = q[0] * b + q[1] * a;
    double disc = cross * cross + 4.0 * one_minus_ab * q[0] * q[1];
    return (cross + std::sqrt(disc)) / (2.0 * one_minus_ab);
}

RangeBuild build_range(const Vec& q, double z_lo, double z_hi) {
    RangeBuild out;
    out.sqrt_depth = sqrt_depth_from_quantities(q, z_lo, z_hi);
    if (out.sqrt_depth <= 0.0) return out;
    out.virtual_q = {q[0] + out.sqrt_depth / std::sqrt(z_hi), q[1] + out.sqrt_depth * std::sqrt(z_lo)};
    out.implied_spot = out.virtual_q[1] / out.virtual_q[0];
    return out;
}

std::vector<std::size_t> covering_positions(const std::vector<LpPosition>& positions,
                                            const std::vector<int>& unit_lower) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < positions.size(); ++j)
        if (positions[j].range.contains_unit(unit_lower)) out.push_back(j);
    return out;
}

void check_unit(const TickGrid& grid, const std::vector<int>& unit_lower) {
    if (unit_lower.size() != grid.n_dims()) fail(Errc::dimension_mismatch, "unit range dimension");
    for (std::size_t d = 0; d < unit_lower.size(); ++d)
        if (unit_lower[d] < 0 || unit_lower[d] >= grid.n_ranges(d))
            fail(Errc::off_grid_range, "unit range index " + std::to_string(unit_lower[d]));
}

} // namespace

TickGrid make_tick_grid(std::vector<Vec> dims) {
    if (dims.empty()) fail(Errc::bad_config, "tick grid needs at least one dimension");
    for (const Vec& ticks : dims) {
        if (ticks.size() < 2) fail(Errc::bad_config, "each grid dimension needs at least two ticks");
        double prev = 0.0;
        for (double t : ticks) {
            if (!(t > 0.0) || !std::isfinite(t)) fail(Errc::bad_config, "ticks must be positive and finite");
            if (t <= prev) fail(Errc::bad_config, "ticks must be strictly increasing");
            prev = t;
        }
    }
    return TickGrid{std::move(dims)};
}

TickGrid make_geometric_grid(double min_price, double max_price, double ratio) {
    if (!(min_price > 0.0) || !(max_price > min_price)) fail(Errc::bad_config, "grid price bounds");
    if (!(ratio > 1.0)) fail(Errc::bad_config, "grid ratio must exceed 1");
    Vec ticks{min_price};
    double t = min_price;
    while (t * ratio <= max_price * (1.0 + 1e-9)) {
        t *= ratio;
        ticks.push_back(std::min(t, max_price));
    }
    if (ticks.back() < max_price * (1.0 - 1e-12)) ticks.push_back(max_price);
    return make_tick_grid({std::move(ticks)});
}

bool PriceRange::contains_unit(const std::vector<int>& unit_lower) const {
    if (unit_lower.size() != bounds.size()) return false;
    for (std::size_t d = 0; d < bounds.size(); ++d)
        if (unit_lower[d] < bounds[d].first || unit_lower[d] + 1 > bounds[d].second) return false;
    return true;
}

PriceRange make_price_range(const TickGrid& grid, const Vec& lower_prices, const Vec& upper_prices) {
    if (lower_prices.size() != grid.n_dims() || upper_prices.size() != grid.n_dims())
        fail(Errc::dimension_mismatch, "price range dimension");
    PriceRange range;
    for (std::size_t d = 0; d < grid.n_dims(); ++d) {
        const Vec& ticks = grid.dims[d];
        auto on_grid = [&](double price) -> int {
            for (std::size_t i = 0; i < ticks.size(); ++i)
                if (std::abs(price - ticks[i]) <= 1e-9 * std::max(1.0, ticks[i])) return static_cast<int>(i);
            fail(Errc::off_grid_range, "price " + std::to_string(price) + " is not a grid tick");
        };
        int lo = on_grid(lower_prices[d]);
        int hi = on_grid(upper_prices[d]);
        if (lo >= hi) fail(Errc::off_grid_range, "range bounds must satisfy lower < upper");
        range.bounds.emplace_back(lo, hi);
    }
    return range;
}

Vec range_quantities(const std::vector<LpPosition>& positions, const TickGrid& grid,
                     const std::vector<int>& unit_lower) {
    check_unit(grid, unit_lower);
    Vec sum = vec::zeros(grid.n_assets());
    for (const auto& pos : positions) {
        if (!pos.range.contains_unit(unit_lower)) continue;
        vec::check_same_size(pos.quantities, sum);
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += pos.quantities[i];
    }
    return sum;
}

double range_share(const std::vector<LpPosition>& positions, const TickGrid& grid,
                   const std::string& lp_id, const std::vector<int>& unit_lower) {
    Vec total = range_quantities(positions, grid, unit_lower);
    double denom = 0.0;
    for (double q : total) denom += q;
    if (denom <= 0.0) fail(Errc::empty_range, "no liquidity in the unit range");

    double mine = 0.0;
    for (const auto& pos : positions) {
        if (pos.lp_id != lp_id || !pos.range.contains_unit(unit_lower)) continue;
        for (double q : pos.quantities) mine += q;
    }
    return mine / denom;
}

std::vector<int> find_active_range(const TickGrid& grid, const Vec& spot_per_dim) {
    if (spot_per_dim.size() != grid.n_dims()) fail(Errc::dimension_mismatch, "spot dimension");
    std::vector<int> unit(grid.n_dims());
    for (std::size_t d = 0; d < grid.n_dims(); ++d) {
        const Vec& ticks = grid.dims[d];
        double z = spot_per_dim[d];
        if (!(z > ticks.front()) || !(z <= ticks.back()))
            fail(Errc::price_off_grid, "price " + std::to_string(z) + " outside the grid extent");
        auto it = std::lower_bound(ticks.begin(), ticks.end(), z);
        unit[d] = static_cast<int>(it - ticks.begin()) - 1;
    }
    return unit;
}

Vec virtualize(const Vec& real_q, double z_lo, double z_hi, double virtual_depth) {
    check_two_assets(real_q.size());
    if (!(z_lo > 0.0 && z_hi > z_lo)) fail(Errc::off_grid_range, "range bounds must satisfy 0 < lower < upper");
    if (!(virtual_depth > 0.0)) fail(Errc::inconsistent_depth, "virtual depth must be positive");
    if (!vec::all_non_negative(real_q)) fail(Errc::non_positive_quantity, "real quantities");

    double s = std::sqrt(virtual_depth);
    Vec v{real_q[0] + s / std::sqrt(z_hi), real_q[1] + s * std::sqrt(z_lo)};
    double product = v[0] * v[1];
    if (std::abs(product - virtual_depth) > 1e-6 * virtual_depth)
        fail(Errc::inconsistent_depth, "real quantities are inconsistent with the stated virtual depth");
    return v;
}

double virtual_depth_from_quantities(const Vec& real_q, double z_lo, double z_hi) {
    check_two_assets(real_q.size());
    if (!(z_lo > 0.0 && z_hi > z_lo)) fail(Errc::off_grid_range, "range bounds must satisfy 0 < lower < upper");
    if (!vec::all_non_negative(real_q)) fail(Errc::non_positive_quantity, "real quantities");
    double s = sqrt_depth_from_quantities(real_q, z_lo, z_hi);
    return s * s;
}

Vec position_quantities_for_price(double z_lo, double z_hi, double sqrt_depth, double spot) {
    if (!(z_lo > 0.0 && z_hi > z_lo)) fail(Errc::off_grid_range, "range bounds must satisfy 0 < lower < upper");
    if (!(sqrt_depth >= 0.0)) fail(Errc::inconsistent_depth, "sqrt depth");
    double z = std::clamp(spot, z_lo, z_hi);
    double q1 = sqrt_depth * (1.0 / std::sqrt(z) - 1.0 / std::sqrt(z_hi));
    double q2 = sqrt_depth * (std::sqrt(z) - std::sqrt(z_lo));
    return {std::max(q1, 0.0), std::max(q2, 0.0)};
}

Vec ClPoolState::total_real_quantities() const {
    Vec sum = vec::zeros(2);
    for (const auto& pos : positions)
        for (std::size_t i = 0; i < 2; ++i) sum[i] += pos.quantities[i];
    return sum;
}

std::vector<Vec> ClPoolState::spot_matrix() const {
    return {{1.0, spot}, {1.0 / spot, 1.0}};
}

ClPoolState make_cl_pool(TickGrid grid, FeeParams fees, std::vector<LpPosition> positions,
                         double initial_spot) {
    if (grid.n_dims() != 1)
        fail(Errc::unsupported_spec, "concentrated execution supports a one-dimensional grid (two assets)");
    validate_fee_params(fees);

    ClPoolState state;
    state.grid = std::move(grid);
    state.fees = fees;
    int n_ranges = state.grid.n_ranges(0);

    for (auto& pos : positions) {
        if (pos.range.bounds.size() != 1) fail(Errc::dimension_mismatch, "position range dimension");
        auto [lo, hi] = pos.range.bounds[0];
        if (lo < 0 || hi > n_ranges) fail(Errc::off_grid_range, "position range off grid");
        if (pos.quantities.size() != 2 || !vec::all_non_negative(pos.quantities))
            fail(Errc::non_positive_quantity, "position quantities");
        if (pos.uncollected_fees.empty()) pos.uncollected_fees = vec::zeros(2);
        if (!state.lp_cumulative_fees.count(pos.lp_id)) state.lp_cumulative_fees[pos.lp_id] = vec::zeros(2);
    }
    state.positions = std::move(positions);
    state.cumulative_lp_fees = vec::zeros(2);
    state.treasury = vec::zeros(2);

    auto activate = [&](int r) -> bool {
        double z_lo = tick_at(state.grid, r), z_hi = tick_at(state.grid, r + 1);
        Vec q = range_quantities(state.positions, state.grid, {r});
        if (q[0] + q[1] <= 0.0) return false;
        RangeBuild built = build_range(q, z_lo, z_hi);
        if (initial_spot > 0.0) {
            if (std::abs(built.implied_spot - initial_spot) > kEntryTol * initial_spot)
                fail(Errc::inconsistent_depth,
                     "active-range quantities imply a different price than the configured one");
        } else {
            // A range holding only asset 1 implies exactly its lower bound
            // (excluded, half-open below); only asset 2 implies its upper
            // bound (included).
            if (!(built.implied_spot > z_lo * (1.0 + 1e-12))) return false;
            if (built.implied_spot > z_hi * (1.0 + 1e-12)) return false;
        }
        state.active = ActiveRangeState{r, built.virtual_q, built.sqrt_depth * built.sqrt_depth, q};
        state.spot = std::min(built.implied_spot, z_hi);
        return true;
    };

    if (initial_spot > 0.0) {
        int r = find_active_range(state.grid, {initial_spot})[0];
        if (!activate(r)) {
            // Explicit price with an empty active range: valid but inert.
            state.active = ActiveRangeState{r, vec::zeros(2), 0.0, vec::zeros(2)};
            state.spot = initial_spot;
        }
        return state;
    }

    // Scan top-down: below-price ranges are consistent with any higher price
    // (they imply their own upper bound), so the highest consistent range is
    // the active one.
    for (int r = n_ranges - 1; r >= 0; --r)
        if (activate(r)) return state;
    fail(Errc::empty_range, "no unit range implies an in-range price; supply an initial spot");
}

namespace {

struct Crossing {
    double fraction;  // trade fraction to the nearest bound, measured on the full trade
    Boundary boundary;
};

Crossing crossing_fraction(const ActiveRangeState& active, const TickGrid& grid, double given_delta,
                           std::size_t given_pos) {
    double z_lo = tick_at(grid, active.index), z_hi = tick_at(grid, active.index + 1);
    double s = std::sqrt(active.virtual_depth);
    if (given_pos == 0) {
        if (given_delta > 0.0)  // asset 1 flows in, price falls
            return {(s / std::sqrt(z_lo) - active.virtual_q[0]) / given_delta, Boundary::lower};
        return {(s / std::sqrt(z_hi) - active.virtual_q[0]) / given_delta, Boundary::upper};
    }
    if (given_delta > 0.0)  // asset 2 flows in, price rises
        return {(s * std::sqrt(z_hi) - active.virtual_q[1]) / given_delta, Boundary::upper};
    return {(s * std::sqrt(z_lo) - active.virtual_q[1]) / given_delta, Boundary::lower};
}

} // namespace

CrossingControl solve_crossing_control(const ClPoolState& state, const ValidatedTrade& trade) {
    check_two_assets(trade.event.deltas.size());
    std::size_t k = trade.event.solve_for.pos();
    std::size_t g = 1 - k;
    double d = trade.event.deltas[g];
    if (d == 0.0) return {1.0, Boundary::none};
    if (!(state.active.virtual_depth > 0.0)) fail(Errc::liquidity_exhausted, "active range has no liquidity");

    Crossing c = crossing_fraction(state.active, state.grid, d, g);
    if (c.fraction >= 1.0 - kBetaTol) return {1.0, Boundary::none};
    return {c.fraction, c.boundary};
}

ClTradeResult execute_trade(const ClPoolState& state, const ValidatedTrade& trade,
                            const FeeParams* fee_override) {
    check_two_assets(trade.event.deltas.size());
    const FeeParams fees = fee_override ? *fee_override : state.fees;
    validate_fee_params(fees);

    std::size_t k = trade.event.solve_for.pos();
    std::size_t g = 1 - k;
    double given_total = trade.event.deltas[g];

    ClTradeResult result;
    result.state = state;
    result.executed = vec::zeros(2);
    result.solved = vec::zeros(2);
    ClPoolState& work = result.state;

    if (given_total == 0.0) return result;

    auto cross_into = [&](int next_index, double entry_tick) {
        if (next_index < 0 || next_index >= work.grid.n_ranges(0))
            fail(Errc::liquidity_exhausted, "trade path leaves the price grid");
        Vec q = range_quantities(work.positions, work.grid, {next_index});
        if (q[0] + q[1] <= 0.0)
            fail(Errc::liquidity_exhausted, "next unit range has no liquidity");
        double z_lo = tick_at(work.grid, next_index), z_hi = tick_at(work.grid, next_index + 1);
        RangeBuild built = build_range(q, z_lo, z_hi);
        if (std::abs(built.implied_spot - entry_tick) > kEntryTol * entry_tick)
            fail(Errc::inconsistent_depth, "range quantities are inconsistent at the crossed tick");
        work.active = ActiveRangeState{next_index, built.virtual_q, built.sqrt_depth * built.sqrt_depth, q};
        work.spot = built.implied_spot;
    };

    auto run_segment = [&](double beta, Boundary boundary) {
        ActiveRangeState& active = work.active;
        double dvg = beta * given_total;
        double vg_next = active.virtual_q[g] + dvg;
        double vk_next = active.virtual_depth / vg_next;

        Vec solved(2);
        solved[g] = dvg;
        solved[k] = vk_next - active.virtual_q[k];

        TradeSegment seg;
        seg.range_index = active.index;
        seg.beta = beta;
        seg.boundary = boundary;
        seg.solved = solved;
        seg.executed = solved;
        seg.lp_fees = vec::zeros(2);
        Vec treasury_fee = vec::zeros(2);
        for (std::size_t i = 0; i < 2; ++i) {
            if (solved[i] > 0.0) {
                seg.executed[i] = solved[i] / (1.0 - fees.gamma);
                seg.lp_fees[i] = fees.gamma * (1.0 - fees.phi) * seg.executed[i];
                treasury_fee[i] = fees.gamma * fees.phi * seg.executed[i];
            }
        }

        // Fee and flow attribution uses shares frozen at segment start.
        auto covering = covering_positions(work.positions, {active.index});
        double denom = 0.0;
        for (std::size_t j : covering)
            denom += work.positions[j].quantities[0] + work.positions[j].quantities[1];
        for (std::size_t j : covering) {
            LpPosition& pos = work.positions[j];
            double share = (pos.quantities[0] + pos.quantities[1]) / denom;
            for (std::size_t i = 0; i < 2; ++i) {
                pos.quantities[i] = std::max(pos.quantities[i] + share * solved[i], 0.0);
                pos.uncollected_fees[i] += share * seg.lp_fees[i];
            }
            Vec& cum = work.lp_cumulative_fees[pos.lp_id];
            for (std::size_t i = 0; i < 2; ++i) cum[i] += share * seg.lp_fees[i];
            auto it = result.lp_fees.emplace(pos.lp_id, vec::zeros(2)).first;
            for (std::size_t i = 0; i < 2; ++i) it->second[i] += share * seg.lp_fees[i];
        }

        active.virtual_q[g] = vg_next;
        active.virtual_q[k] = vk_next;
        for (std::size_t i = 0; i < 2; ++i) {
            active.real_q[i] += solved[i];
            work.cumulative_lp_fees[i] += seg.lp_fees[i];
            work.treasury[i] += treasury_fee[i];
            result.solved[i] += solved[i];
            result.executed[i] += seg.executed[i];
        }
        if (boundary != Boundary::none) {
            std::size_t depleted = (boundary == Boundary::upper) ? 0 : 1;
            seg.boundary_residual = std::abs(active.real_q[depleted]);
            active.real_q[depleted] = std::max(active.real_q[depleted], 0.0);
        }
        work.spot = active.virtual_q[1] / active.virtual_q[0];
        result.segments.push_back(std::move(seg));
    };

    double budget = 1.0;
    int guard = 2 * work.grid.n_ranges(0) + 8;
    while (budget > kBetaTol) {
        if (--guard < 0) fail(Errc::solver_no_converge, "trade segmentation did not terminate");
        if (!(work.active.virtual_depth > 0.0))
            fail(Errc::liquidity_exhausted, "active range has no liquidity");

        Crossing c = crossing_fraction(work.active, work.grid, given_total, g);

        if (c.fraction >= budget + kBetaTol) {
            run_segment(budget, Boundary::none);
            break;
        }
        if (c.fraction >= budget - kBetaTol) {
            // Trade ends exactly on the tick. Downward landings hand the
            // active range to the lower neighbour (half-open convention);
            // no zero-beta segment is emitted and an empty neighbour is
            // fine because nothing is traded against it.
            run_segment(budget, c.boundary);
            if (c.boundary == Boundary::lower && work.active.index > 0) {
                int below = work.active.index - 1;
                double tick = tick_at(work.grid, work.active.index);
                Vec q = range_quantities(work.positions, work.grid, {below});
                if (q[0] + q[1] <= 0.0) {
                    work.active = ActiveRangeState{below, vec::zeros(2), 0.0, vec::zeros(2)};
                    work.spot = tick;
                } else {
                    cross_into(below, tick);
                }
            }
            break;
        }
        if (c.fraction <= kBetaTol) {
            // Price already pinned at a bound: relocate without a segment.
            int next = work.active.index + (c.boundary == Boundary::upper ? 1 : -1);
            double tick = tick_at(work.grid, work.active.index + (c.boundary == Boundary::upper ? 1 : 0));
            cross_into(next, tick);
            continue;
        }

        run_segment(c.fraction, c.boundary);
        budget -= c.fraction;
        int next = work.active.index + (c.boundary == Boundary::upper ? 1 : -1);
        double tick = tick_at(work.grid, work.active.index + (c.boundary == Boundary::upper ? 1 : 0));
        cross_into(next, tick);
    }
    return result;
}

ClPoolState apply_cl_quote(const ClPoolState& state, const ValidatedQuote& quote) {
    ClPoolState next = state;
    const std::string& lp = quote.event.lp_id;

    std::vector<std::size_t> mine;
    for (std::size_t j = 0; j < next.positions.size(); ++j)
        if (next.positions[j].lp_id == lp) mine.push_back(j);
    if (mine.empty())
        fail(Errc::unknown_lp, "quote by LP '" + lp + "' without a configured position");

    double alpha = quote.alpha;
    if (!quote.is_provide) {
        if (alpha < -(1.0 + kQuoteProportionTol)) fail(Errc::overdraw, "withdrawal exceeds position holdings");
        if (alpha < -(1.0 - 1e-9)) alpha = -1.0;
    }

    bool touches_active = false;
    for (std::size_t j : mine) {
        LpPosition& pos = next.positions[j];
        if (pos.range.contains_unit({next.active.index})) touches_active = true;
        for (double& q : pos.quantities) q *= (1.0 + alpha);
        if (!quote.is_provide) pos.uncollected_fees = vec::zeros(2);  // paid out
    }
    if (alpha == -1.0) {
        std::vector<LpPosition> kept;
        for (std::size_t j = 0; j < next.positions.size(); ++j)
            if (next.positions[j].lp_id != lp) kept.push_back(next.positions[j]);
        next.positions = std::move(kept);
    }

    if (touches_active) {
        int r = next.active.index;
        Vec q = range_quantities(next.positions, next.grid, {r});
        if (q[0] + q[1] <= 0.0) {
            next.active = ActiveRangeState{r, vec::zeros(2), 0.0, vec::zeros(2)};
            // spot kept: the price does not move when liquidity leaves
        } else {
            RangeBuild built = build_range(q, tick_at(next.grid, r), tick_at(next.grid, r + 1));
            next.active = ActiveRangeState{r, built.virtual_q, built.sqrt_depth * built.sqrt_depth, q};
            next.spot = built.implied_spot;
        }
    }
    return next;
}

} // namespace poolsim
