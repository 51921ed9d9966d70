// poolsim: CFMM pool simulation and analytics front end.
//
// Subcommands:
//   simulate      run an event-log simulation from a config file
//   equilibrate   compute the arbitrage trade restoring Z_ij = p_i/p_j
//   profit-region largest single-trade size that is profitable for LPs
//   validate      parse and sanity-check an event log
#include <CLI11.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "poolsim/arbitrage.hpp"
#include "poolsim/metrics.hpp"
#include "poolsim/replay.hpp"

namespace {

using namespace poolsim;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string fmt_vec(const Vec& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt(v[i]);
    }
    return out + "]";
}

// Small-denominator rational rendering (continued fractions); empty when no
// exact-enough fraction exists.
std::string as_fraction(double x) {
    if (!(x > 0.0)) return {};
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double frac = x;
    for (int it = 0; it < 64; ++it) {
        long long a = static_cast<long long>(std::floor(frac));
        long long p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > 1000000) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        double approx = static_cast<double>(p1) / static_cast<double>(q1);
        if (std::abs(approx - x) <= 1e-12 * x)
            return std::to_string(p1) + "/" + std::to_string(q1);
        double rem = frac - static_cast<double>(a);
        if (rem <= 0.0) break;
        frac = 1.0 / rem;
    }
    return {};
}

CfmmSpec spec_from_flags(const std::string& kind, const Vec& weights) {
    if (kind == "constant_product") {
        if (!weights.empty()) throw SimError(Errc::bad_config, "constant_product takes no weights");
        return CfmmSpec::constant_product();
    }
    if (kind == "constant_mean") return CfmmSpec::constant_mean(weights);
    throw SimError(Errc::bad_config, "unknown pool kind '" + kind + "'");
}

int cmd_simulate(const std::string& config_path, const std::string& events_override,
                 const std::string& output_override, long long sampling_override,
                 const std::string& format) {
    SimulationConfig cfg = load_config(config_path);
    if (!events_override.empty()) cfg.events_path = events_override;
    if (!output_override.empty()) cfg.output_path = output_override;
    if (sampling_override > 0) cfg.sampling_period = sampling_override;

    SimulationResult result = run_simulation(cfg);
    export_series(result.series, cfg.output_path);
    const SimulationReport& report = result.report;

    bool csv = format == "csv";
    if (csv) {
        std::printf("key,value\n");
        std::printf("events_total,%zu\n", report.total_events);
        std::printf("events_applied,%zu\n", report.applied);
        std::printf("events_rejected,%zu\n", report.rejected.size());
        std::printf("injected_arbitrage_trades,%zu\n", report.injected_arbitrage_trades);
        std::printf("series_rows,%zu\n", result.series.size());
        std::printf("output,%s\n", cfg.output_path.c_str());
        std::printf("numeraire,hold_value,pool_value,pool_value_with_fees,il,rv,farv\n");
        for (const auto& m : report.final_metrics)
            std::printf("%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", m.numeraire.label().c_str(),
                        m.hold_value, m.pool_value, m.pool_value_with_fees, m.il, m.rv, m.farv);
        for (const auto& lp : report.lp_outcomes)
            std::printf("lp,%s,%s\n", lp.lp_id.c_str(), lp.farv ? fmt(*lp.farv).c_str() : "n/a");
        return 0;
    }

    std::printf("events: total=%zu applied=%zu rejected=%zu injected_arbitrage=%zu\n",
                report.total_events, report.applied, report.rejected.size(),
                report.injected_arbitrage_trades);
    std::printf("series: %zu rows -> %s\n", result.series.size(), cfg.output_path.c_str());
    std::printf("total LP fees: %s\n", fmt_vec(report.total_lp_fees).c_str());
    std::printf("treasury:      %s\n", fmt_vec(report.total_treasury).c_str());
    std::printf("final metrics:\n");
    std::printf("  %-8s %12s %12s %14s %12s %10s %10s\n", "numeraire", "hold", "pool", "pool+fees",
                "il", "rv", "farv");
    for (const auto& m : report.final_metrics)
        std::printf("  %-8s %12s %12s %14s %12s %10s %10s\n", m.numeraire.label().c_str(),
                    fmt(m.hold_value).c_str(), fmt(m.pool_value).c_str(),
                    fmt(m.pool_value_with_fees).c_str(), fmt(m.il).c_str(), fmt(m.rv).c_str(),
                    fmt(m.farv).c_str());
    std::printf("lp profitability (fiat FARV):\n");
    for (const auto& lp : report.lp_outcomes)
        std::printf("  %-10s %s  fees=%s\n", lp.lp_id.c_str(),
                    lp.farv ? fmt(*lp.farv).c_str() : "n/a", fmt_vec(lp.fees_earned).c_str());
    if (!report.rejected.empty()) {
        std::printf("rejected events:\n");
        for (const auto& r : report.rejected)
            std::printf("  event %zu (line %zu): %s\n", r.index, r.line, r.reason.c_str());
    }
    return 0;
}

int cmd_equilibrate(const std::string& kind, const Vec& weights, const Vec& quantities,
                    const Vec& prices, double gamma, double phi, const std::string& mode_name) {
    CfmmSpec spec = spec_from_flags(kind, weights);
    FeeParams fees{gamma, phi};
    UniformPoolState pool = make_uniform_pool(spec, fees, quantities);

    std::vector<Vec> z = spot_price_matrix(pool.spec, pool.q);
    ArbitrageReport before = make_arbitrage_report(z, prices);
    std::printf("specific arbitrage delta_ij:\n");
    for (std::size_t i = 0; i < prices.size(); ++i) std::printf("  %s\n", fmt_vec(before.specific[i]).c_str());
    std::printf("total arbitrage delta_j: %s\n", fmt_vec(before.total).c_str());

    EquilibrationMode mode =
        mode_name == "fee_aware" ? EquilibrationMode::fee_aware : EquilibrationMode::fee_free;
    auto trade = equilibrate(pool, prices, mode);
    if (!trade) {
        std::printf("no arbitrage: pool already satisfies the price balance condition\n");
        return 0;
    }

    ValidatedTrade vt = validate_trade(*trade, pool.n_assets());
    const FeeParams zero{0.0, 0.0};
    TradeResult applied = apply_trade(pool, vt, mode == EquilibrationMode::fee_free ? &zero : nullptr);

    std::printf("equilibration trade (solve leg %d): deltas=%s\n", trade->solve_for.value,
                fmt_vec(applied.solved).c_str());
    std::printf("post-trade reserves: %s\n", fmt_vec(applied.state.q).c_str());
    std::vector<Vec> z_after = spot_price_matrix(applied.state.spec, applied.state.q);
    std::printf("post-trade spot prices Z_ij:\n");
    for (std::size_t i = 0; i < prices.size(); ++i) std::printf("  %s\n", fmt_vec(z_after[i]).c_str());
    ArbitrageReport after = make_arbitrage_report(z_after, prices);
    std::printf("residual total arbitrage: %s\n", fmt_vec(after.total).c_str());
    return 0;
}

int cmd_profit_region(double q_x, const Vec& weights, double gamma, double phi) {
    Vec w = weights.empty() ? Vec{0.5, 0.5} : weights;
    ProfitRegion region = balancer_profitable_bound(q_x, w, FeeParams{gamma, phi});
    double bound = region.bound();
    if (!(bound > 0.0)) {
        std::printf("no profitable trades (bound 0)\n");
        return 0;
    }
    double rate = bound / q_x;
    std::string frac = as_fraction(rate);
    if (!frac.empty())
        std::printf("profitable region: 0 < dq_x <= (%s)*q_x = %s\n", frac.c_str(), fmt(bound).c_str());
    else
        std::printf("profitable region: 0 < dq_x <= %s*q_x = %s\n", fmt(rate).c_str(), fmt(bound).c_str());
    return 0;
}

int cmd_validate(const std::string& path, int assets) {
    std::vector<EventRecord> events = load_event_log(path);
    std::size_t trades = 0, quotes = 0, prices = 0;
    for (const auto& rec : events) {
        std::size_t dim =
            rec.kind == EventRecord::Kind::price_update ? rec.prices.size() : rec.deltas.size();
        if (assets > 0 && dim != static_cast<std::size_t>(assets))
            throw SimError(Errc::dimension_mismatch,
                           "line " + std::to_string(rec.line) + ": expected " +
                               std::to_string(assets) + " assets");
        switch (rec.kind) {
            case EventRecord::Kind::trade: ++trades; break;
            case EventRecord::Kind::quote: ++quotes; break;
            case EventRecord::Kind::price_update: ++prices; break;
        }
    }
    std::printf("ok: %zu records (%zu trades, %zu quotes, %zu price updates)\n", events.size(),
                trades, quotes, prices);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CFMM pool simulation: uniform and concentrated liquidity, fees, arbitrage, LP analytics"};
    app.require_subcommand(1);

    // simulate
    std::string config_path, events_override, output_override, sim_format = "plain";
    long long sampling_override = 0;
    auto* sim = app.add_subcommand("simulate", "Replay an event log and export the metric series");
    sim->add_option("config", config_path, "Simulation config file")->required();
    sim->add_option("--events", events_override, "Override the event log path");
    sim->add_option("--output", output_override, "Override the output path");
    sim->add_option("--sampling-period", sampling_override, "Override the sampling period (seconds)");
    sim->add_option("--format", sim_format, "Summary format")
        ->check(CLI::IsMember({"plain", "csv"}));

    // equilibrate
    std::string eq_kind = "constant_product", eq_mode = "fee_free";
    Vec eq_weights, eq_quantities, eq_prices;
    double eq_gamma = 0.0, eq_phi = 0.0;
    auto* eq = app.add_subcommand("equilibrate", "Arbitrage report and equilibration trade");
    eq->add_option("--kind", eq_kind, "constant_product | constant_mean");
    eq->add_option("--weights", eq_weights, "Constant-mean weights");
    eq->add_option("--quantities", eq_quantities, "Pool reserves")->required();
    eq->add_option("--prices", eq_prices, "External FIAT prices")->required();
    eq->add_option("--gamma", eq_gamma, "Total fee rate");
    eq->add_option("--phi", eq_phi, "Protocol fee share");
    eq->add_option("--mode", eq_mode, "fee_free | fee_aware")
        ->check(CLI::IsMember({"fee_free", "fee_aware"}));

    // profit-region
    double pr_qx = 0.0, pr_gamma = 0.0025, pr_phi = 0.1;
    Vec pr_weights;
    auto* pr = app.add_subcommand("profit-region", "Profitable single-trade region for LPs");
    pr->add_option("--qx", pr_qx, "Pool quantity of the inbound asset")->required();
    pr->add_option("--weights", pr_weights, "Two-asset weights (default 0.5 0.5)");
    pr->add_option("--gamma", pr_gamma, "Total fee rate");
    pr->add_option("--phi", pr_phi, "Protocol fee share");

    // validate
    std::string log_path;
    int val_assets = 0;
    auto* val = app.add_subcommand("validate", "Parse and sanity-check an event log");
    val->add_option("log", log_path, "Event log file")->required();
    val->add_option("--assets", val_assets, "Expected asset count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(config_path, events_override, output_override, sampling_override,
                                sim_format);
        if (eq->parsed()) {
            if (!vec::all_positive(eq_prices))
                throw SimError(Errc::non_finite, "prices must be positive");
            return cmd_equilibrate(eq_kind, eq_weights, eq_quantities, eq_prices, eq_gamma, eq_phi,
                                   eq_mode);
        }
        if (pr->parsed()) return cmd_profit_region(pr_qx, pr_weights, pr_gamma, pr_phi);
        if (val->parsed()) return cmd_validate(log_path, val_assets);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
