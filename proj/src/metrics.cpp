#include "poolsim/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace poolsim {

namespace {

// Value of a quantity vector in the chosen numeraire at window end.
double value_at_end(const Vec& q, const WindowLedger& ledger, const Numeraire& numeraire) {
    if (numeraire.is_fiat()) return vec::dot(q, ledger.prices_end);
    std::size_t j = numeraire.asset.pos();
    double v = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) v += q[i] * ledger.spot_end[i][j];
    return v;
}

} // namespace

std::string Numeraire::label() const {
    return is_fiat() ? "fiat" : "asset" + std::to_string(asset.value);
}

void check_ledger(const WindowLedger& ledger, double rel_tol) {
    vec::check_same_size(ledger.q_start, ledger.q_end_nofee);
    vec::check_same_size(ledger.q_start, ledger.hold_q);
    vec::check_same_size(ledger.q_start, ledger.trade_sum);
    for (std::size_t i = 0; i < ledger.q_start.size(); ++i) {
        double reconstructed = ledger.hold_q[i] + ledger.trade_sum[i];
        double scale = std::max({1.0, std::abs(reconstructed), std::abs(ledger.q_end_nofee[i])});
        if (std::abs(reconstructed - ledger.q_end_nofee[i]) > rel_tol * scale)
            fail(Errc::inconsistent_ledger,
                 "start + flows does not reproduce end quantities for asset " + std::to_string(i + 1));
    }
}

double impermanent_loss(const WindowLedger& ledger, const Numeraire& numeraire) {
    check_ledger(ledger);
    return value_at_end(ledger.hold_q, ledger, numeraire) -
           value_at_end(ledger.q_end_nofee, ledger, numeraire);
}

double relative_value(const WindowLedger& ledger, const Numeraire& numeraire, bool with_fees) {
    double hold = value_at_end(ledger.hold_q, ledger, numeraire);
    if (!(hold > 0.0)) fail(Errc::zero_hold_value, "hold value is not positive");
    Vec q = ledger.q_end_nofee;
    if (with_fees) q = vec::add(q, ledger.fee_sum);
    return value_at_end(q, ledger, numeraire) / hold;
}

MetricSnapshot snapshot_metrics(const WindowLedger& ledger, const Numeraire& numeraire,
                                Timestamp timestamp) {
    MetricSnapshot snap;
    snap.timestamp = timestamp;
    snap.numeraire = numeraire;
    snap.hold_value = value_at_end(ledger.hold_q, ledger, numeraire);
    snap.pool_value = value_at_end(ledger.q_end_nofee, ledger, numeraire);
    snap.pool_value_with_fees = value_at_end(vec::add(ledger.q_end_nofee, ledger.fee_sum), ledger, numeraire);
    snap.il = snap.hold_value - snap.pool_value;
    if (!(snap.hold_value > 0.0)) fail(Errc::zero_hold_value, "hold value is not positive");
    snap.rv = snap.pool_value / snap.hold_value;
    snap.farv = snap.pool_value_with_fees / snap.hold_value;
    return snap;
}

double lp_relative_value(const WindowLedger& lp_ledger, const Numeraire& numeraire) {
    double hold = value_at_end(lp_ledger.hold_q, lp_ledger, numeraire);
    if (!(hold > 0.0)) fail(Errc::zero_hold_value, "LP hold value is not positive");
    Vec q = vec::add(lp_ledger.q_end_nofee, lp_ledger.fee_sum);
    return value_at_end(q, lp_ledger, numeraire) / hold;
}

// ---------------------------------------------------------------------------
// Profitable-trade region
// ---------------------------------------------------------------------------

bool ProfitRegion::profitable(double dq_x) const {
    if (!(dq_x > 0.0)) return false;
    double wx = weights[0], wy = weights[1];
    double r = wx / wy;
    double c = fees.gamma * (1.0 - fees.phi) / (1.0 - fees.gamma);
    double g = fees.gamma / (1.0 - fees.gamma);
    double px = std::pow(q_x, r);
    double px_after = std::pow(q_x + dq_x, r);
    // q_y scales both terms and is dropped.
    double lhs = dq_x * wx * px * (1.0 + c) +
                 wy * (q_x + dq_x + g * dq_x) * (px - px_after);
    return lhs >= 0.0;
}

double ProfitRegion::bound() const {
    if (std::abs(weights[0] - 0.5) <= 1e-12 && std::abs(weights[1] - 0.5) <= 1e-12)
        return profitable_bound_closed_form(q_x, weights, fees);

    if (!profitable(q_x * 1e-12)) return 0.0;
    double hi = q_x;
    int grow = 0;
    while (profitable(hi)) {
        hi *= 2.0;
        if (++grow > 80) fail(Errc::solver_no_converge, "profitable region appears unbounded");
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && (hi - lo) > 1e-12 * std::max(1.0, hi); ++it) {
        double mid = 0.5 * (lo + hi);
        if (profitable(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

ProfitRegion balancer_profitable_bound(double q_x, Vec weights, FeeParams fees) {
    if (!(q_x > 0.0)) fail(Errc::non_positive_quantity, "q_x must be positive");
    if (weights.size() != 2) fail(Errc::unsupported_weights, "two-asset weights required");
    double sum = weights[0] + weights[1];
    if (!(weights[0] > 0.0 && weights[1] > 0.0) || std::abs(sum - 1.0) > 1e-12)
        fail(Errc::unsupported_weights, "weights must be positive and sum to 1");
    validate_fee_params(fees);
    return ProfitRegion{q_x, std::move(weights), fees};
}

double profitable_bound_closed_form(double q_x, const Vec& weights, const FeeParams& fees) {
    if (weights.size() != 2 || std::abs(weights[0] - 0.5) > 1e-12 || std::abs(weights[1] - 0.5) > 1e-12)
        fail(Errc::unsupported_weights, "closed form requires 50/50 weights");
    // For w = (1/2, 1/2) the inequality reduces to
    //   dq_x * (q_x * gamma (1-phi)/(1-gamma) - dq_x/(1-gamma)) >= 0
    // so the boundary is gamma*(1-phi)*q_x.
    return fees.gamma * (1.0 - fees.phi) * q_x;
}

std::pair<double, double> reduced_quadratic_coeffs(const FeeParams& fees) {
    double a2 = 0.5 / (1.0 - fees.gamma);
    double a1 = 0.5 * fees.gamma * (1.0 - fees.phi) / (1.0 - fees.gamma);
    return {a2, a1};
}

bool trade_profitability_scan(const UniformPoolState& pool, const ValidatedTrade& trade) {
    TradeResult result = apply_trade(pool, trade);
    std::size_t n = pool.n_assets();

    // Numeraire: the outbound leg.
    std::size_t y = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (result.solved[i] < result.solved[y]) y = i;

    // Post-fee reserves grow by the full fee (LP and treasury portions):
    // the hat prices live on that curve.
    Vec q_hat(n);
    for (std::size_t i = 0; i < n; ++i) q_hat[i] = result.state.q[i] + result.fees.treasury_fees[i];

    double numerator = 0.0, denominator = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double z_hat = spot_price(pool.spec, q_hat, AssetIndex(int(i) + 1), AssetIndex(int(y) + 1));
        numerator += (pool.q[i] + result.solved[i] + result.fees.lp_fees[i]) * z_hat;
        denominator += pool.q[i] * z_hat;
    }
    if (!(denominator > 0.0)) fail(Errc::zero_hold_value, "hold value is not positive");
    return numerator / denominator >= 1.0;
}

} // namespace poolsim
