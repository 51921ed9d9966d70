#include "poolsim/core.hpp"

#include <algorithm>
#include <cmath>

namespace poolsim {

namespace vec {

bool all_finite(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool all_positive(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0 && std::isfinite(x); });
}

bool all_non_negative(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0 && std::isfinite(x); });
}

Vec add(const Vec& a, const Vec& b) {
    check_same_size(a, b);
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Vec sub(const Vec& a, const Vec& b) {
    check_same_size(a, b);
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Vec zeros(std::size_t n) { return Vec(n, 0.0); }

double dot(const Vec& a, const Vec& b) {
    check_same_size(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace vec

void validate_fee_params(const FeeParams& fees) {
    if (!(fees.gamma >= 0.0 && fees.gamma < 1.0))
        fail(Errc::bad_config, "fee rate gamma must lie in [0,1)");
    if (!(fees.phi >= 0.0 && fees.phi <= 1.0))
        fail(Errc::bad_config, "protocol share phi must lie in [0,1]");
}

ValidatedTrade validate_trade(const TradeEvent& event, std::size_t n_assets) {
    if (event.deltas.size() != n_assets)
        fail(Errc::dimension_mismatch, "trade has " + std::to_string(event.deltas.size()) +
                                           " deltas for a " + std::to_string(n_assets) + "-asset pool");
    check_asset_index(event.solve_for, n_assets);

    bool any_nonzero = false;
    for (std::size_t i = 0; i < n_assets; ++i) {
        if (i == event.solve_for.pos()) continue;
        if (!std::isfinite(event.deltas[i]))
            fail(Errc::non_finite, "trade delta for asset " + std::to_string(i + 1));
        if (event.deltas[i] != 0.0) any_nonzero = true;
    }
    if (!any_nonzero) fail(Errc::all_zero_trade, "every given delta is zero");

    // The solved leg always takes the sign opposite to the net flow of the
    // given legs, so the mixed-sign requirement is satisfiable whenever any
    // given delta is non-zero.
    return ValidatedTrade{event};
}

ValidatedQuote validate_quote(const QuoteEvent& event, const Vec& current) {
    vec::check_same_size(event.deltas, current);
    if (!vec::all_finite(event.deltas)) fail(Errc::non_finite, "quote deltas");

    bool any_pos = false, any_neg = false;
    for (double d : event.deltas) {
        if (d > 0.0) any_pos = true;
        if (d < 0.0) any_neg = true;
    }
    if (any_pos && any_neg) fail(Errc::mixed_signs, "quote deltas must share one sign");
    if (!any_pos && !any_neg) fail(Errc::disproportionate_quote, "all-zero quote");

    bool pool_empty = std::all_of(current.begin(), current.end(), [](double q) { return q == 0.0; });
    if (pool_empty) {
        if (any_neg) fail(Errc::overdraw, "withdrawal from an empty pool");
        return ValidatedQuote{event, true, 0.0, true};
    }

    // Proportionality: every touched asset must imply the same factor
    // alpha = dq_i / q_i within kQuoteProportionTol (relative).
    double alpha = 0.0;
    bool have_alpha = false;
    for (std::size_t i = 0; i < current.size(); ++i) {
        if (current[i] == 0.0) {
            if (event.deltas[i] != 0.0)
                fail(Errc::disproportionate_quote,
                     "quote touches asset " + std::to_string(i + 1) + " which the pool does not hold");
            continue;
        }
        double a = event.deltas[i] / current[i];
        if (!have_alpha) {
            alpha = a;
            have_alpha = true;
        } else if (std::abs(a - alpha) > kQuoteProportionTol * std::max(std::abs(alpha), std::abs(a))) {
            fail(Errc::disproportionate_quote,
                 "quote is not proportional to pool quantities (asset " + std::to_string(i + 1) + ")");
        }
    }
    if (!have_alpha || alpha == 0.0) fail(Errc::disproportionate_quote, "quote leaves the pool unchanged");

    // A quote must be proportional across *all* held assets, not only the
    // ones it touches: a zero delta against a positive holding breaks Eq-style
    // proportionality and is caught by the alpha comparison above (a == 0).
    return ValidatedQuote{event, alpha > 0.0, alpha, false};
}

double weight(const Vec& q, const Vec& prices_in_j, AssetIndex i) {
    vec::check_same_size(q, prices_in_j);
    check_asset_index(i, q.size());
    if (!vec::all_finite(prices_in_j) || !vec::all_positive(prices_in_j))
        fail(Errc::non_finite, "prices must be positive and finite");

    double denom = vec::dot(q, prices_in_j);
    if (denom <= 0.0) fail(Errc::zero_value_pool, "pool value is zero");
    return q[i.pos()] * prices_in_j[i.pos()] / denom;
}

Vec aggregate_quotes(const std::vector<QuoteEvent>& quotes, std::size_t n_assets) {
    Vec sum = vec::zeros(n_assets);
    for (const auto& quote : quotes) {
        if (quote.deltas.size() != n_assets)
            fail(Errc::dimension_mismatch, "quote dimension does not match pool");
        for (std::size_t i = 0; i < n_assets; ++i) sum[i] += quote.deltas[i];
    }
    return sum;
}

} // namespace poolsim
