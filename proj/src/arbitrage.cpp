#include "poolsim/arbitrage.hpp"

#include <algorithm>
#include <cmath>

namespace poolsim {

namespace {

void check_fiat(const Vec& fiat) {
    if (!vec::all_positive(fiat)) fail(Errc::non_finite, "FIAT prices must be positive and finite");
}

int pick_solve_leg(const Vec& deltas) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < deltas.size(); ++i)
        if (std::abs(deltas[i]) > std::abs(deltas[best])) best = i;
    return static_cast<int>(best) + 1;
}

bool within_pbc(const std::vector<Vec>& z, const Vec& fiat, double rel_tol) {
    std::size_t n = fiat.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double target = fiat[i] / fiat[j];
            if (std::abs(z[i][j] - target) > rel_tol * target) return false;
        }
    return true;
}

} // namespace

double specific_arbitrage(const std::vector<Vec>& z, const Vec& fiat, AssetIndex i, AssetIndex j) {
    check_fiat(fiat);
    check_asset_index(i, fiat.size());
    check_asset_index(j, fiat.size());
    return z[i.pos()][j.pos()] - fiat[i.pos()] / fiat[j.pos()];
}

double total_arbitrage(const std::vector<Vec>& z, const Vec& fiat, AssetIndex j) {
    check_fiat(fiat);
    check_asset_index(j, fiat.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < fiat.size(); ++i)
        sum += z[i][j.pos()] - fiat[i] / fiat[j.pos()];
    return sum;
}

ArbitrageReport make_arbitrage_report(const std::vector<Vec>& z, const Vec& fiat, double rel_tol) {
    check_fiat(fiat);
    std::size_t n = fiat.size();
    ArbitrageReport report;
    report.specific.assign(n, vec::zeros(n));
    report.total = vec::zeros(n);
    report.in_equilibrium = true;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            double target = fiat[i] / fiat[j];
            double d = z[i][j] - target;
            report.specific[i][j] = d;
            report.total[j] += d;
            if (std::abs(d) > rel_tol * target) report.in_equilibrium = false;
        }
    }
    return report;
}

std::optional<TradeEvent> equilibrate(const UniformPoolState& pool, const Vec& fiat,
                                      EquilibrationMode mode, Timestamp timestamp) {
    (void)mode;  // the deltas are the fee-free PBC solution in both modes
    check_fiat(fiat);
    if (pool.empty()) fail(Errc::insolvent_trade, "cannot equilibrate an empty pool");
    vec::check_same_size(fiat, pool.q);
    std::size_t n = pool.n_assets();

    std::vector<Vec> z = spot_price_matrix(pool.spec, pool.q);
    if (within_pbc(z, fiat, kEquilibriumRelTol)) return std::nullopt;

    Vec target(n);
    switch (pool.spec.kind()) {
        case CfmmKind::ConstantProduct: {
            double k = pool.depth.k;
            target[0] = std::sqrt(k * fiat[1] / fiat[0]);
            target[1] = std::sqrt(k * fiat[0] / fiat[1]);
            break;
        }
        case CfmmKind::ConstantMean: {
            // At the PBC, value fractions equal the weights: q_i p_i / w_i
            // is constant on the level set.
            const Vec& w = pool.spec.weights();
            double log_c = std::log(pool.depth.k);
            for (std::size_t i = 0; i < n; ++i) log_c -= w[i] * std::log(w[i] / fiat[i]);
            double c = std::exp(log_c);
            for (std::size_t i = 0; i < n; ++i) target[i] = c * w[i] / fiat[i];
            break;
        }
        case CfmmKind::Custom: {
            // Gauss-Seidel over pairwise trades: repeatedly solve the
            // (i, N) sub-condition with the bracketed root solver.
            Vec q = pool.q;
            bool converged = false;
            for (int sweep = 0; sweep < 200 && !converged; ++sweep) {
                for (std::size_t i = 0; i + 1 < n; ++i) {
                    double ratio = fiat[i] / fiat[n - 1];
                    auto mismatch = [&](double x) {
                        Vec bump = vec::zeros(n);
                        bump[i] = x;
                        double dk = solve_trade(pool.spec, q, bump, AssetIndex(int(n)));
                        Vec moved = vec::add(q, bump);
                        moved[n - 1] += dk;
                        return spot_price(pool.spec, moved, AssetIndex(int(i) + 1), AssetIndex(int(n))) - ratio;
                    };
                    double lo = -q[i] * (1.0 - 1e-9);
                    double hi = q[i];
                    while (mismatch(hi) > 0.0 && hi < q[i] * 1e9) hi *= 2.0;
                    if (mismatch(lo) * mismatch(hi) > 0.0)
                        fail(Errc::solver_no_converge, "could not bracket the price balance condition");
                    double x = bracketed_root_solve(mismatch, lo, hi, 1e-13, 300);
                    Vec bump = vec::zeros(n);
                    bump[i] = x;
                    double dk = solve_trade(pool.spec, q, bump, AssetIndex(int(n)));
                    q[i] += x;
                    q[n - 1] += dk;
                }
                converged = within_pbc(spot_price_matrix(pool.spec, q), fiat, kEquilibriumRelTol * 0.1);
            }
            if (!converged) fail(Errc::solver_no_converge, "price balance iteration did not converge");
            target = q;
            break;
        }
    }

    TradeEvent trade;
    trade.deltas = vec::sub(target, pool.q);
    trade.timestamp = timestamp;
    trade.solve_for = AssetIndex(pick_solve_leg(trade.deltas));
    trade.deltas[trade.solve_for.pos()] = 0.0;
    return trade;
}

std::optional<TradeEvent> equilibrate(const ClPoolState& pool, const Vec& fiat,
                                      EquilibrationMode mode, Timestamp timestamp) {
    (void)mode;
    check_fiat(fiat);
    if (fiat.size() != 2) fail(Errc::dimension_mismatch, "concentrated pools are two-asset");

    double z_target = fiat[0] / fiat[1];
    if (std::abs(pool.spot - z_target) <= kEquilibriumRelTol * z_target) return std::nullopt;

    // Clip the target to the grid extent; the walk below also stops early if
    // it runs into an empty range, leaving residual arbitrage.
    const Vec& ticks = pool.grid.dims[0];
    z_target = std::clamp(z_target, ticks.front(), ticks.back());

    bool rising = z_target > pool.spot;
    double dq1_total = 0.0;

    int r = pool.active.index;
    double v1 = pool.active.virtual_q.empty() ? 0.0 : pool.active.virtual_q[0];
    double s = std::sqrt(pool.active.virtual_depth);
    if (!(s > 0.0)) fail(Errc::liquidity_exhausted, "active range has no liquidity");

    int guard = pool.grid.n_ranges(0) + 2;
    while (guard-- > 0) {
        double z_lo = ticks[static_cast<std::size_t>(r)];
        double z_hi = ticks[static_cast<std::size_t>(r) + 1];
        double stop = rising ? std::min(z_target, z_hi) : std::max(z_target, z_lo);
        dq1_total += s / std::sqrt(stop) - v1;
        if ((rising && z_target <= z_hi) || (!rising && z_target >= z_lo)) break;

        int next = r + (rising ? 1 : -1);
        if (next < 0 || next >= pool.grid.n_ranges(0)) break;
        Vec q = range_quantities(pool.positions, pool.grid, {next});
        if (q[0] + q[1] <= 0.0) break;  // cannot walk further; stop at the tick
        double tick = rising ? z_hi : z_lo;
        s = std::sqrt(virtual_depth_from_quantities(q, ticks[static_cast<std::size_t>(next)],
                                                    ticks[static_cast<std::size_t>(next) + 1]));
        v1 = s / std::sqrt(tick);
        r = next;
    }

    if (dq1_total == 0.0) return std::nullopt;
    TradeEvent trade;
    trade.deltas = {dq1_total, 0.0};
    trade.solve_for = AssetIndex(2);
    trade.timestamp = timestamp;
    return trade;
}

} // namespace poolsim
