// Impermanent loss, relative value, fee-adjusted relative value, LP-level
// profitability and the two-asset constant-mean profitable-trade region.
#pragma once

#include <functional>
#include <optional>

#include "poolsim/uniform_pool.hpp"

namespace poolsim {

struct Numeraire {
    enum class Kind { Fiat, Asset } kind{Kind::Fiat};
    AssetIndex asset{1};

    static Numeraire fiat() { return Numeraire{}; }
    static Numeraire in_asset(int j) { return Numeraire{Kind::Asset, AssetIndex(j)}; }

    bool is_fiat() const { return kind == Kind::Fiat; }
    std::string label() const;
};

// Everything needed to evaluate one [t, T] window.
// hold_q accumulates q_start plus every quote delta in event order, so a
// quotes-only window reproduces the pool ledger bit for bit and RV/FARV
// come out exactly 1.
struct WindowLedger {
    Vec q_start;       // q^t (fee-free)
    Vec hold_q;        // q^t + sum of quote deltas
    Vec q_end_nofee;   // q^T
    Vec trade_sum;     // fee-free trade deltas over the window
    Vec fee_sum;       // lambda_[t..T]
    Vec prices_end;    // p^T
    std::vector<Vec> spot_end;  // Z^T

    Vec quote_sum() const { return vec::sub(hold_q, q_start); }
};

// q_start + quotes + trades must reproduce q_end_nofee within rel_tol.
void check_ledger(const WindowLedger& ledger, double rel_tol = 1e-9);

struct MetricSnapshot {
    Timestamp timestamp{0};
    Numeraire numeraire;
    double hold_value{0.0};
    double pool_value{0.0};
    double pool_value_with_fees{0.0};
    double il{0.0};
    double rv{0.0};
    double farv{0.0};
};

double impermanent_loss(const WindowLedger& ledger, const Numeraire& numeraire);
double relative_value(const WindowLedger& ledger, const Numeraire& numeraire, bool with_fees);
MetricSnapshot snapshot_metrics(const WindowLedger& ledger, const Numeraire& numeraire,
                                Timestamp timestamp);

// LP-level FARV: (q~^T + lambda~^T) / (q~^t + dq~^Y) valued at Z^T; the LP
// is profitable iff the result is >= 1.
double lp_relative_value(const WindowLedger& lp_ledger, const Numeraire& numeraire);

// ---------------------------------------------------------------------------
// Two-asset constant-mean profitable-trade region
// ---------------------------------------------------------------------------

// LP profitability of a single isolated deposit-x trade of size dq_x
// against a pool holding q_x of the inbound asset. The inequality is
// evaluated with post-fee spot prices (reserves grown by the full fee).
struct ProfitRegion {
    double q_x{0.0};
    Vec weights;
    FeeParams fees;

    bool profitable(double dq_x) const;
    // Largest profitable dq_x; closed form for 50/50 weights, bisection on
    // the predicate otherwise. Zero when no trade is profitable.
    double bound() const;
};

ProfitRegion balancer_profitable_bound(double q_x, Vec weights, FeeParams fees);

// 50/50 closed form gamma*(1-phi)*q_x; UnsupportedWeights otherwise.
double profitable_bound_closed_form(double q_x, const Vec& weights, const FeeParams& fees);

// Coefficients (a2, a1) of the reduced 50/50 inequality
//   -a2 * dq_x^2 + a1 * q_x * dq_x >= 0    (both scaled by q_y)
std::pair<double, double> reduced_quadratic_coeffs(const FeeParams& fees);

// Simulates the trade on a copy of the pool and evaluates the LP
// profitability condition with post-fee spot prices, using the outbound
// leg as numeraire. Whole-pool view (single passive LP).
bool trade_profitability_scan(const UniformPoolState& pool, const ValidatedTrade& trade);

} // namespace poolsim
