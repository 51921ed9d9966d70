#include "poolsim/cfmm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace poolsim {

namespace {

void check_positive_quantities(const Vec& q) {
    for (std::size_t i = 0; i < q.size(); ++i)
        if (!(q[i] > 0.0) || !std::isfinite(q[i]))
            fail(Errc::non_positive_quantity, "quantity of asset " + std::to_string(i + 1));
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Scale direction d so that F(t*d) == level; F is increasing in every
// coordinate, so the scaling is monotone in t.
Vec project_to_level(const InvariantFn& f, const Vec& d, double level) {
    auto g = [&](double t) {
        Vec q(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) q[i] = t * d[i];
        return f(q) - level;
    };
    double t = bracketed_root_solve(g, 1e-9, 1e9, 1e-12, 300);
    Vec out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = t * d[i];
    return out;
}

// Spot-check that f behaves like a CFMM invariant near reference_q:
// increasing in every coordinate and quasi-concave (convex upper level
// sets). 100 deterministic samples; not a proof.
void spot_check_custom(const InvariantFn& f, std::size_t n, const Vec& ref) {
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> logu(-1.0, 1.0);

    auto sample = [&] {
        Vec q(n);
        for (std::size_t i = 0; i < n; ++i) q[i] = ref[i] * std::exp(logu(rng));
        return q;
    };

    for (int it = 0; it < 50; ++it) {
        Vec q = sample();
        double base = f(q);
        if (!std::isfinite(base) || base <= 0.0)
            fail(Errc::bad_spec, "custom invariant not positive on sampled state");
        for (std::size_t i = 0; i < n; ++i) {
            Vec up = q;
            up[i] += 1e-6 * q[i];
            if (f(up) < base * (1.0 - 1e-9))
                fail(Errc::bad_spec, "custom invariant not increasing in asset " + std::to_string(i + 1));
        }
    }

    for (int it = 0; it < 50; ++it) {
        Vec a = sample();
        double level = f(a);
        Vec b = project_to_level(f, sample(), level);
        Vec mid(n);
        for (std::size_t i = 0; i < n; ++i) mid[i] = 0.5 * (a[i] + b[i]);
        if (f(mid) < level * (1.0 - 1e-9))
            fail(Errc::bad_spec, "custom invariant fails the convex level-set check");
    }
}

} // namespace

CfmmSpec CfmmSpec::constant_product() {
    CfmmSpec spec;
    spec.kind_ = CfmmKind::ConstantProduct;
    spec.n_assets_ = 2;
    return spec;
}

CfmmSpec CfmmSpec::constant_mean(Vec weights) {
    if (weights.size() < 2) fail(Errc::bad_spec, "constant mean needs at least two weights");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0 && w < 1.0)) fail(Errc::bad_spec, "weights must lie in (0,1)");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) fail(Errc::bad_spec, "weights must sum to 1");

    CfmmSpec spec;
    spec.kind_ = CfmmKind::ConstantMean;
    spec.n_assets_ = weights.size();
    spec.weights_ = std::move(weights);
    return spec;
}

CfmmSpec CfmmSpec::custom(std::size_t n_assets, InvariantFn f, const Vec& reference_q) {
    if (n_assets < 2) fail(Errc::bad_spec, "custom invariant needs at least two assets");
    if (!f) fail(Errc::bad_spec, "custom invariant evaluator is empty");
    if (reference_q.size() != n_assets) fail(Errc::dimension_mismatch, "reference state dimension");
    check_positive_quantities(reference_q);
    spot_check_custom(f, n_assets, reference_q);

    CfmmSpec spec;
    spec.kind_ = CfmmKind::Custom;
    spec.n_assets_ = n_assets;
    spec.custom_ = std::move(f);
    return spec;
}

double CfmmSpec::evaluate(const Vec& q) const {
    switch (kind_) {
        case CfmmKind::ConstantProduct:
            return q[0] * q[1];
        case CfmmKind::ConstantMean: {
            double log_k = 0.0;
            for (std::size_t i = 0; i < q.size(); ++i) log_k += weights_[i] * std::log(q[i]);
            return std::exp(log_k);
        }
        case CfmmKind::Custom:
            return custom_(q);
    }
    fail(Errc::bad_spec, "unknown cfmm kind");
}

Depth invariant(const CfmmSpec& spec, const Vec& q) {
    if (spec.n_assets() != 0 && q.size() != spec.n_assets())
        fail(Errc::dimension_mismatch, "quantity vector dimension");
    check_positive_quantities(q);
    return Depth{spec.evaluate(q)};
}

double spot_price(const CfmmSpec& spec, const Vec& q, AssetIndex i, AssetIndex j) {
    check_asset_index(i, q.size());
    check_asset_index(j, q.size());
    if (i == j) return 1.0;
    check_positive_quantities(q);

    switch (spec.kind()) {
        case CfmmKind::ConstantProduct:
            return q[j.pos()] / q[i.pos()];
        case CfmmKind::ConstantMean:
            return (q[j.pos()] * spec.weights()[i.pos()]) / (q[i.pos()] * spec.weights()[j.pos()]);
        case CfmmKind::Custom: {
            // Central difference of q_j along the level set.
            double h = 1e-7 * q[i.pos()];
            Vec bump = vec::zeros(q.size());
            bump[i.pos()] = h;
            double up = solve_trade(spec, q, bump, j);
            bump[i.pos()] = -h;
            double down = solve_trade(spec, q, bump, j);
            return -(up - down) / (2.0 * h);
        }
    }
    fail(Errc::bad_spec, "unknown cfmm kind");
}

std::vector<Vec> spot_price_matrix(const CfmmSpec& spec, const Vec& q) {
    std::size_t n = q.size();
    std::vector<Vec> z(n, Vec(n, 1.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) z[i][j] = spot_price(spec, q, AssetIndex(int(i) + 1), AssetIndex(int(j) + 1));
    return z;
}

double solve_trade(const CfmmSpec& spec, const Vec& q, const Vec& given_deltas, AssetIndex solve_for) {
    vec::check_same_size(given_deltas, q);
    check_asset_index(solve_for, q.size());
    check_positive_quantities(q);
    std::size_t k = solve_for.pos();

    for (std::size_t i = 0; i < q.size(); ++i) {
        if (i == k) continue;
        if (!std::isfinite(given_deltas[i])) fail(Errc::non_finite, "trade delta");
        if (!(q[i] + given_deltas[i] > 0.0))
            fail(Errc::insolvent_trade, "trade drains asset " + std::to_string(i + 1));
    }

    switch (spec.kind()) {
        case CfmmKind::ConstantProduct: {
            std::size_t other = 1 - k;
            double d = given_deltas[other];
            return -q[k] * d / (q[other] + d);
        }
        case CfmmKind::ConstantMean: {
            // q_k' = q_k * prod_{i != k} (q_i / q_i')^{w_i / w_k}
            const Vec& w = spec.weights();
            double s = 0.0;
            for (std::size_t i = 0; i < q.size(); ++i) {
                if (i == k || given_deltas[i] == 0.0) continue;
                s += w[i] * (std::log(q[i]) - std::log(q[i] + given_deltas[i]));
            }
            return q[k] * std::expm1(s / w[k]);
        }
        case CfmmKind::Custom: {
            double target = spec.evaluate(q);
            Vec moved = vec::add(q, given_deltas);
            auto g = [&](double x) {
                moved[k] = q[k] + x;
                return spec.evaluate(moved) - target;
            };
            double lo = -q[k] * (1.0 - 1e-12);
            if (g(lo) > 0.0) fail(Errc::insolvent_trade, "no positive solution for the solved leg");
            double hi = q[k];
            int grow = 0;
            while (g(hi) < 0.0) {
                hi *= 2.0;
                if (++grow > 200) fail(Errc::no_bracket, "could not bracket the solved leg");
            }
            return bracketed_root_solve(g, lo, hi, detail::kInvariantRelTol, 200);
        }
    }
    fail(Errc::bad_spec, "unknown cfmm kind");
}

Depth depth_after_quote(const CfmmSpec& spec, const Vec& q, const Vec& quote_deltas) {
    Vec next = vec::add(q, quote_deltas);
    check_positive_quantities(next);
    return Depth{spec.evaluate(next)};
}

double bracketed_root_solve(const std::function<double(double)>& f, double lo, double hi,
                            double rel_tol, int max_iter) {
    double a = lo, b = hi;
    double fa = f(a), fb = f(b);
    if (!std::isfinite(fa) || !std::isfinite(fb)) fail(Errc::non_finite, "root solve endpoint");
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (sign_of(fa) == sign_of(fb)) fail(Errc::no_bracket, "no sign change on [lo, hi]");

    for (int it = 0; it < max_iter; ++it) {
        double width = std::abs(b - a);
        double scale = std::max({1.0, std::abs(a), std::abs(b)});
        if (width <= rel_tol * scale) return 0.5 * (a + b);

        // Secant step on even iterations, bisection otherwise: secant for
        // speed, bisection to guarantee the bracket keeps shrinking.
        double x;
        if (it % 2 == 0 && fb != fa) {
            x = b - fb * (b - a) / (fb - fa);
            double margin = 0.01 * width;
            if (!(x > std::min(a, b) + margin && x < std::max(a, b) - margin)) x = 0.5 * (a + b);
        } else {
            x = 0.5 * (a + b);
        }

        double fx = f(x);
        if (fx == 0.0) return x;
        if (sign_of(fx) == sign_of(fa)) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    fail(Errc::solver_no_converge, "root solve exceeded the iteration cap");
}

} // namespace poolsim
