// Price-balance diagnostics and pool equilibration against external FIAT
// prices: specific/total arbitrage and the trade that restores
// Z_{i,j} = p_i / p_j.
#pragma once

#include <optional>

#include "poolsim/concentrated_pool.hpp"
#include "poolsim/uniform_pool.hpp"

namespace poolsim {

// Relative tolerance on each pairwise price for "in equilibrium".
inline constexpr double kEquilibriumRelTol = 1e-9;

struct ArbitrageReport {
    std::vector<Vec> specific;  // delta_{i,j} = Z_{i,j} - p_i/p_j
    Vec total;                  // delta_j = sum_i delta_{i,j}
    bool in_equilibrium{false};
};

double specific_arbitrage(const std::vector<Vec>& z, const Vec& fiat, AssetIndex i, AssetIndex j);
double total_arbitrage(const std::vector<Vec>& z, const Vec& fiat, AssetIndex j);
ArbitrageReport make_arbitrage_report(const std::vector<Vec>& z, const Vec& fiat,
                                      double rel_tol = kEquilibriumRelTol);

enum class EquilibrationMode { fee_free, fee_aware };

// The trade that moves every spot price onto the price balance condition;
// nullopt when the pool is already within tolerance. In fee_free mode the
// caller should apply the trade with fees overridden to zero; in fee_aware
// mode the pool's own fee path applies (leaving a residual band).
// The returned deltas are the fee-free target flows; the leg with the
// largest magnitude is left to the pool to solve.
std::optional<TradeEvent> equilibrate(const UniformPoolState& pool, const Vec& fiat,
                                      EquilibrationMode mode = EquilibrationMode::fee_free,
                                      Timestamp timestamp = 0);

// Concentrated variant: the trade is clipped to the grid extent, so applying
// it can leave residual arbitrage (reported by make_arbitrage_report).
std::optional<TradeEvent> equilibrate(const ClPoolState& pool, const Vec& fiat,
                                      EquilibrationMode mode = EquilibrationMode::fee_free,
                                      Timestamp timestamp = 0);

} // namespace poolsim
