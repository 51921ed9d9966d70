// Constant-function market maker abstraction: invariant evaluation, spot
// prices, trade solving and depth recomputation for constant-product,
// constant-mean and user-supplied invariants.
#pragma once

#include <functional>
#include <optional>

#include "poolsim/core.hpp"

namespace poolsim {

enum class CfmmKind { ConstantProduct, ConstantMean, Custom };

// Invariant value K = F(q).
struct Depth {
    double k{0.0};
};

using InvariantFn = std::function<double(const Vec&)>;

class CfmmSpec {
public:
    // Defaults to a two-asset constant product.
    CfmmSpec() = default;

    // Constant product q1*q2 = K (two assets).
    static CfmmSpec constant_product();

    // Constant mean prod q_i^{w_i} = K; weights in (0,1), summing to 1
    // within 1e-12.
    static CfmmSpec constant_mean(Vec weights);

    // User-supplied invariant. Monotonicity and quasi-concavity (convex
    // level sets) are spot-checked on a deterministic 100-point sample
    // around reference_q; violations raise BadSpec.
    static CfmmSpec custom(std::size_t n_assets, InvariantFn f, const Vec& reference_q);

    CfmmKind kind() const { return kind_; }
    // 0 means "any dimension" (constant mean fixes it via the weights).
    std::size_t n_assets() const { return n_assets_; }
    const Vec& weights() const { return weights_; }

    double evaluate(const Vec& q) const;

private:
    CfmmKind kind_{CfmmKind::ConstantProduct};
    std::size_t n_assets_{2};
    Vec weights_;
    InvariantFn custom_;
};

Depth invariant(const CfmmSpec& spec, const Vec& q);

// Instantaneous price Z_{i,j} = -dq_j/dq_i on the invariant surface.
double spot_price(const CfmmSpec& spec, const Vec& q, AssetIndex i, AssetIndex j);

// Full price matrix, Z[i-1][j-1] = Z_{i,j}.
std::vector<Vec> spot_price_matrix(const CfmmSpec& spec, const Vec& q);

// Solve the unknown leg of a fee-free trade so F(q + delta) = F(q).
// given_deltas[solve_for-1] is ignored.
double solve_trade(const CfmmSpec& spec, const Vec& q, const Vec& given_deltas, AssetIndex solve_for);

Depth depth_after_quote(const CfmmSpec& spec, const Vec& q, const Vec& quote_deltas);

// Hybrid bisection/secant root finder on a bracketing interval.
// f must be continuous with sign(f(lo)) != sign(f(hi)).
double bracketed_root_solve(const std::function<double(double)>& f, double lo, double hi,
                            double rel_tol = 1e-12, int max_iter = 200);

namespace detail {
// Relative invariant-conservation tolerance for solved trades.
inline constexpr double kInvariantRelTol = 1e-12;
} // namespace detail

} // namespace poolsim
