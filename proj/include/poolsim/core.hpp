// Shared domain types: quantities, prices, pool events, fee parameters,
// event validation and quote/fee aggregation.
//
// Asset indices are 1-based throughout the API (asset 1..N); vector storage
// is 0-based, so asset i lives at position i-1.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poolsim/errors.hpp"

namespace poolsim {

using Vec = std::vector<double>;
using Timestamp = std::int64_t;

// 1-based asset index.
struct AssetIndex {
    int value{1};

    AssetIndex() = default;
    explicit AssetIndex(int v) : value(v) {}

    // 0-based storage position.
    std::size_t pos() const { return static_cast<std::size_t>(value - 1); }

    friend bool operator==(AssetIndex a, AssetIndex b) { return a.value == b.value; }
};

inline void check_asset_index(AssetIndex i, std::size_t n_assets) {
    if (i.value < 1 || static_cast<std::size_t>(i.value) > n_assets)
        fail(Errc::bad_solve_index,
             "asset index " + std::to_string(i.value) + " out of [1, " + std::to_string(n_assets) + "]");
}

// Total fee rate gamma in [0,1) and protocol share phi in [0,1].
struct FeeParams {
    double gamma{0.0};
    double phi{0.0};
};

void validate_fee_params(const FeeParams& fees);

// Per-trade fee split: lambda (LP portion) and the treasury portion, token units.
struct FeeAccrual {
    Vec lp_fees;
    Vec treasury_fees;
};

// A trade: the trader fixes every delta except the one at solve_for, which
// the pool solves on the invariant. deltas[solve_for-1] is ignored.
struct TradeEvent {
    Vec deltas;
    AssetIndex solve_for{1};
    Timestamp timestamp{0};
};

// A proportional provide/withdraw by one LP.
struct QuoteEvent {
    Vec deltas;
    std::string lp_id;
    Timestamp timestamp{0};
};

struct ValidatedTrade {
    TradeEvent event;
};

struct ValidatedQuote {
    QuoteEvent event;
    bool is_provide{true};
    // Proportionality factor: deltas == alpha * current quantities.
    // Meaningless (0) for the bootstrap quote into an empty pool.
    double alpha{0.0};
    bool bootstrap{false};
};

// Relative tolerance for quote proportionality (decimal event logs cannot
// hold exact double ratios).
inline constexpr double kQuoteProportionTol = 1e-9;

ValidatedTrade validate_trade(const TradeEvent& event, std::size_t n_assets);

ValidatedQuote validate_quote(const QuoteEvent& event, const Vec& current);

// Proportion of pool value held in asset i, priced in asset j:
//   w_i = q_i Z_{i,j} / sum_m q_m Z_{m,j}
// prices_in_j[m] = Z_{m+1,j}; the numeraire entry must be 1.
double weight(const Vec& q, const Vec& prices_in_j, AssetIndex i);

// Componentwise sum of quote deltas over a window; empty list -> zero vector.
Vec aggregate_quotes(const std::vector<QuoteEvent>& quotes, std::size_t n_assets);

// Small vector helpers shared across modules.
namespace vec {

bool all_finite(const Vec& v);
bool all_positive(const Vec& v);
bool all_non_negative(const Vec& v);
Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec zeros(std::size_t n);
double dot(const Vec& a, const Vec& b);

inline void check_same_size(const Vec& a, const Vec& b) {
    if (a.size() != b.size())
        fail(Errc::dimension_mismatch,
             "vector sizes differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

} // namespace vec

} // namespace poolsim
