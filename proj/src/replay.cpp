#include "poolsim/replay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace poolsim {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
        if (tok.front() == '#') break;  // trailing comment
        out.push_back(tok);
    }
    return out;
}

double parse_number(const std::string& tok, std::size_t line, const std::string& what) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + tok.size() || tok.empty())
        fail(Errc::parse_error, "line " + std::to_string(line) + ": bad " + what + " '" + tok + "'");
    return v;
}

Timestamp parse_timestamp(const std::string& tok, std::size_t line) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    long long v = std::strtoll(begin, &end, 10);
    if (end != begin + tok.size() || tok.empty())
        fail(Errc::parse_error, "line " + std::to_string(line) + ": bad timestamp '" + tok + "'");
    return v;
}

} // namespace

std::vector<EventRecord> parse_event_log(std::istream& in, const std::string& source_name) {
    std::vector<EventRecord> out;
    std::string line;
    std::size_t line_no = 0;
    std::size_t dim = 0;
    Timestamp prev_ts = std::numeric_limits<Timestamp>::min();

    while (std::getline(in, line)) {
        ++line_no;
        auto tokens = tokenize(line);
        if (tokens.empty()) continue;

        EventRecord rec;
        rec.line = line_no;
        const std::string& kind = tokens[0];
        auto bad = [&](const std::string& why) {
            fail(Errc::parse_error, source_name + " line " + std::to_string(line_no) + ": " + why);
        };

        if (tokens.size() < 3) bad("record needs a kind, a timestamp and a payload");
        rec.timestamp = parse_timestamp(tokens[1], line_no);
        if (rec.timestamp < prev_ts)
            fail(Errc::non_monotone_timestamps,
                 source_name + " line " + std::to_string(line_no) + ": timestamp decreases");
        prev_ts = rec.timestamp;

        if (kind == "trade") {
            rec.kind = EventRecord::Kind::trade;
            for (std::size_t i = 2; i < tokens.size(); ++i) {
                if (tokens[i] == "null") {
                    if (rec.solve_for != 0) bad("more than one null leg");
                    rec.solve_for = static_cast<int>(i - 1);
                    rec.deltas.push_back(0.0);
                } else {
                    rec.deltas.push_back(parse_number(tokens[i], line_no, "trade delta"));
                }
            }
            if (rec.solve_for == 0) bad("trade needs exactly one null leg");
        } else if (kind == "quote") {
            rec.kind = EventRecord::Kind::quote;
            if (tokens.size() < 4) bad("quote needs an lp id and deltas");
            rec.lp_id = tokens[2];
            for (std::size_t i = 3; i < tokens.size(); ++i)
                rec.deltas.push_back(parse_number(tokens[i], line_no, "quote delta"));
        } else if (kind == "price_update") {
            rec.kind = EventRecord::Kind::price_update;
            for (std::size_t i = 2; i < tokens.size(); ++i)
                rec.prices.push_back(parse_number(tokens[i], line_no, "price"));
        } else {
            bad("unknown record kind '" + kind + "'");
        }

        std::size_t n = rec.kind == EventRecord::Kind::price_update ? rec.prices.size() : rec.deltas.size();
        if (dim == 0) dim = n;
        if (n != dim)
            fail(Errc::dimension_mismatch,
                 source_name + " line " + std::to_string(line_no) + ": payload dimension changed");
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<EventRecord> load_event_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_error, "cannot open event log '" + path + "'");
    return parse_event_log(in, path);
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

std::size_t SimulationConfig::n_assets() const {
    if (concentrated) return 2;
    if (kind == CfmmKind::ConstantMean) return weights.size();
    return 2;
}

namespace {

Vec parse_numbers(const std::vector<std::string>& tokens, std::size_t line) {
    Vec out;
    for (const auto& tok : tokens) out.push_back(parse_number(tok, line, "value"));
    return out;
}

bool parse_bool(const std::string& tok, std::size_t line) {
    if (tok == "true" || tok == "1") return true;
    if (tok == "false" || tok == "0") return false;
    fail(Errc::bad_config, "line " + std::to_string(line) + ": bad boolean '" + tok + "'");
}

void validate_config(SimulationConfig& cfg) {
    validate_fee_params(cfg.fees);
    if (cfg.kind == CfmmKind::ConstantMean) {
        if (cfg.weights.empty()) fail(Errc::bad_config, "constant_mean pools need weights");
    } else if (!cfg.weights.empty()) {
        fail(Errc::bad_config, "weights are only valid for constant_mean pools");
    }
    if (cfg.concentrated && cfg.kind != CfmmKind::ConstantProduct)
        fail(Errc::bad_config, "concentrated pools require kind = constant_product");
    if (!cfg.concentrated && !cfg.positions.empty())
        fail(Errc::bad_config, "positions require a [grid] section");
    if (cfg.concentrated && cfg.grid_ticks.empty() && !(cfg.grid_min > 0.0))
        fail(Errc::bad_config, "[grid] needs ticks or min_price/max_price/ratio");

    std::size_t n = cfg.n_assets();
    if (!cfg.initial_quantities.empty() && cfg.initial_quantities.size() != n)
        fail(Errc::bad_config, "initial_quantities dimension");
    if (cfg.initial_prices.empty()) cfg.initial_prices = Vec(n, 1.0);
    if (cfg.initial_prices.size() != n) fail(Errc::bad_config, "initial_prices dimension");
    if (!vec::all_positive(cfg.initial_prices)) fail(Errc::bad_config, "initial_prices must be positive");

    if (cfg.sampling_period <= 0) fail(Errc::bad_config, "sampling_period must be positive");
    if (cfg.events_path.empty()) fail(Errc::bad_config, "[run] events is required");
    if (cfg.output_path.empty()) fail(Errc::bad_config, "[run] output is required");

    if (cfg.numeraires.empty()) {
        cfg.numeraires.push_back(Numeraire::fiat());
        for (std::size_t j = 1; j <= n; ++j) cfg.numeraires.push_back(Numeraire::in_asset(int(j)));
    }
    for (const auto& numeraire : cfg.numeraires)
        if (!numeraire.is_fiat()) check_asset_index(numeraire.asset, n);
}

} // namespace

SimulationConfig parse_config(std::istream& in, const std::string& source_name) {
    SimulationConfig cfg;
    std::string section;
    std::string line;
    std::size_t line_no = 0;
    bool saw_grid = false;

    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        std::string text = line.substr(first, last - first + 1);

        auto bad = [&](const std::string& why) {
            fail(Errc::bad_config, source_name + " line " + std::to_string(line_no) + ": " + why);
        };

        if (text.front() == '[') {
            if (text.back() != ']') bad("malformed section header");
            section = text.substr(1, text.size() - 2);
            if (section != "pool" && section != "grid" && section != "positions" && section != "run")
                bad("unknown section [" + section + "]");
            if (section == "grid") saw_grid = true;
            continue;
        }

        auto eq = text.find('=');
        if (eq == std::string::npos) bad("expected key = value");
        std::string key = text.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        std::string value = text.substr(eq + 1);
        auto vfirst = value.find_first_not_of(" \t");
        value = vfirst == std::string::npos ? "" : value.substr(vfirst);
        auto tokens = tokenize(value);
        if (tokens.empty()) bad("empty value for '" + key + "'");

        if (section == "pool") {
            if (key == "kind") {
                if (tokens[0] == "constant_product") cfg.kind = CfmmKind::ConstantProduct;
                else if (tokens[0] == "constant_mean") cfg.kind = CfmmKind::ConstantMean;
                else bad("unknown pool kind '" + tokens[0] + "'");
            } else if (key == "weights") cfg.weights = parse_numbers(tokens, line_no);
            else if (key == "gamma") cfg.fees.gamma = parse_number(tokens[0], line_no, "gamma");
            else if (key == "phi") cfg.fees.phi = parse_number(tokens[0], line_no, "phi");
            else if (key == "initial_quantities") cfg.initial_quantities = parse_numbers(tokens, line_no);
            else if (key == "initial_lp") cfg.initial_lp = tokens[0];
            else if (key == "initial_prices") cfg.initial_prices = parse_numbers(tokens, line_no);
            else bad("unknown key '" + key + "' in [pool]");
        } else if (section == "grid") {
            if (key == "ticks") cfg.grid_ticks = parse_numbers(tokens, line_no);
            else if (key == "min_price") cfg.grid_min = parse_number(tokens[0], line_no, "min_price");
            else if (key == "max_price") cfg.grid_max = parse_number(tokens[0], line_no, "max_price");
            else if (key == "ratio") cfg.grid_ratio = parse_number(tokens[0], line_no, "ratio");
            else if (key == "initial_price") cfg.initial_price = parse_number(tokens[0], line_no, "initial_price");
            else bad("unknown key '" + key + "' in [grid]");
        } else if (section == "positions") {
            if (key != "position") bad("unknown key '" + key + "' in [positions]");
            if (tokens.size() < 5) bad("position needs: lp_id lower upper q1 q2 ...");
            SimulationConfig::PositionSpec pos;
            pos.lp_id = tokens[0];
            pos.lower = parse_number(tokens[1], line_no, "lower bound");
            pos.upper = parse_number(tokens[2], line_no, "upper bound");
            for (std::size_t i = 3; i < tokens.size(); ++i)
                pos.quantities.push_back(parse_number(tokens[i], line_no, "quantity"));
            cfg.positions.push_back(std::move(pos));
        } else if (section == "run") {
            if (key == "events") cfg.events_path = tokens[0];
            else if (key == "prices") cfg.prices_path = tokens[0];
            else if (key == "sampling_period") cfg.sampling_period = parse_timestamp(tokens[0], line_no);
            else if (key == "equilibrate_each_price_update")
                cfg.equilibrate_each_price_update = parse_bool(tokens[0], line_no);
            else if (key == "equilibration_mode") {
                if (tokens[0] == "fee_free") cfg.equilibration_mode = EquilibrationMode::fee_free;
                else if (tokens[0] == "fee_aware") cfg.equilibration_mode = EquilibrationMode::fee_aware;
                else bad("unknown equilibration_mode '" + tokens[0] + "'");
            } else if (key == "output") cfg.output_path = tokens[0];
            else if (key == "numeraires") {
                for (const auto& tok : tokens) {
                    if (tok == "fiat") cfg.numeraires.push_back(Numeraire::fiat());
                    else if (tok.rfind("asset", 0) == 0)
                        cfg.numeraires.push_back(Numeraire::in_asset(
                            static_cast<int>(parse_timestamp(tok.substr(5), line_no))));
                    else bad("unknown numeraire '" + tok + "'");
                }
            } else bad("unknown key '" + key + "' in [run]");
        } else {
            bad("key outside of any section");
        }
    }

    cfg.concentrated = saw_grid;
    validate_config(cfg);
    return cfg;
}

SimulationConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_error, "config not found: '" + path + "'");
    SimulationConfig cfg = parse_config(in, path);

    // Resolve relative paths against the config directory.
    fs::path base = fs::path(path).parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && fs::path(p).is_relative()) p = (base / p).string();
    };
    resolve(cfg.events_path);
    resolve(cfg.prices_path);
    resolve(cfg.output_path);

    if (!fs::exists(cfg.events_path)) fail(Errc::bad_config, "events file not found: " + cfg.events_path);
    if (!cfg.prices_path.empty() && !fs::exists(cfg.prices_path))
        fail(Errc::bad_config, "prices file not found: " + cfg.prices_path);
    return cfg;
}

// ---------------------------------------------------------------------------
// Simulation driver
// ---------------------------------------------------------------------------

namespace {

struct PoolDriver {
    std::optional<UniformPoolState> uniform;
    std::optional<ClPoolState> cl;

    std::size_t n_assets() const { return uniform ? uniform->n_assets() : cl->n_assets(); }

    Vec reserves_nofee() const { return uniform ? uniform->q_nofee : cl->total_real_quantities(); }

    Vec cumulative_lp_fees() const { return uniform ? uniform->cumulative_lp_fees : cl->cumulative_lp_fees; }

    Vec treasury() const { return uniform ? uniform->treasury : cl->treasury; }

    std::vector<Vec> spot_matrix(const CfmmSpec* spec) const {
        if (uniform) return spot_price_matrix(uniform->spec, uniform->q);
        (void)spec;
        return cl->spot_matrix();
    }

    // Solved (fee-free) deltas of the applied trade.
    Vec apply_trade_event(const ValidatedTrade& trade, const FeeParams* override_fees) {
        if (uniform) {
            TradeResult r = apply_trade(*uniform, trade, override_fees);
            uniform = std::move(r.state);
            return r.solved;
        }
        ClTradeResult r = execute_trade(*cl, trade, override_fees);
        cl = std::move(r.state);
        return r.solved;
    }

    void apply_quote_event(const QuoteEvent& event) {
        if (uniform) {
            ValidatedQuote vq = validate_quote(event, uniform->q);
            uniform = apply_quote(*uniform, vq);
            return;
        }
        Vec held = vec::zeros(2);
        for (const auto& pos : cl->positions)
            if (pos.lp_id == event.lp_id)
                for (std::size_t i = 0; i < 2; ++i) held[i] += pos.quantities[i];
        if (!(held[0] + held[1] > 0.0))
            fail(Errc::unknown_lp, "quote by LP '" + event.lp_id + "' without a position");
        ValidatedQuote vq = validate_quote(event, held);
        cl = apply_cl_quote(*cl, vq);
    }

    std::optional<TradeEvent> equilibration_trade(const Vec& prices, EquilibrationMode mode,
                                                  Timestamp ts) const {
        if (uniform) return equilibrate(*uniform, prices, mode, ts);
        return equilibrate(*cl, prices, mode, ts);
    }

    // lp -> current fee-free holdings
    std::map<std::string, Vec> lp_holdings() const {
        std::map<std::string, Vec> out;
        if (uniform) {
            for (const auto& [lp, share] : uniform->lp_shares) {
                Vec held(uniform->n_assets());
                for (std::size_t i = 0; i < held.size(); ++i) held[i] = share * uniform->q_nofee[i];
                out[lp] = std::move(held);
            }
        } else {
            for (const auto& pos : cl->positions) {
                auto it = out.emplace(pos.lp_id, vec::zeros(2)).first;
                for (std::size_t i = 0; i < 2; ++i) it->second[i] += pos.quantities[i];
            }
        }
        return out;
    }

    std::map<std::string, Vec> lp_fees() const {
        if (uniform) return uniform->lp_accrued_fees;
        return cl->lp_cumulative_fees;
    }
};

PoolDriver build_pool(const SimulationConfig& cfg) {
    PoolDriver driver;
    if (!cfg.concentrated) {
        CfmmSpec spec = cfg.kind == CfmmKind::ConstantMean ? CfmmSpec::constant_mean(cfg.weights)
                                                           : CfmmSpec::constant_product();
        driver.uniform = make_uniform_pool(std::move(spec), cfg.fees, cfg.initial_quantities, cfg.initial_lp);
        return driver;
    }

    TickGrid grid = cfg.grid_ticks.empty()
                        ? make_geometric_grid(cfg.grid_min, cfg.grid_max, cfg.grid_ratio)
                        : make_tick_grid({cfg.grid_ticks});
    std::vector<LpPosition> positions;
    for (const auto& spec : cfg.positions) {
        LpPosition pos;
        pos.lp_id = spec.lp_id;
        pos.range = make_price_range(grid, {spec.lower}, {spec.upper});
        pos.quantities = spec.quantities;
        positions.push_back(std::move(pos));
    }
    driver.cl = make_cl_pool(std::move(grid), cfg.fees, std::move(positions), cfg.initial_price);
    return driver;
}

MetricSnapshot guarded_snapshot(const WindowLedger& ledger, const Numeraire& numeraire, Timestamp ts) {
    try {
        return snapshot_metrics(ledger, numeraire, ts);
    } catch (const SimError& e) {
        if (e.code() != Errc::zero_hold_value) throw;
        MetricSnapshot snap;
        snap.timestamp = ts;
        snap.numeraire = numeraire;
        snap.il = snap.rv = snap.farv = std::numeric_limits<double>::quiet_NaN();
        return snap;
    }
}

} // namespace

SimulationResult run_simulation(const SimulationConfig& config) {
    SimulationConfig cfg = config;
    validate_config(cfg);

    PoolDriver pool = build_pool(cfg);
    std::size_t n = pool.n_assets();

    // Merge the event log with the optional price feed: sort by timestamp,
    // price-feed records first on ties, log order otherwise.
    struct Tagged {
        EventRecord rec;
        int source;  // 0 = price feed, 1 = event log
        std::size_t order;
    };
    std::vector<Tagged> merged;
    {
        std::vector<EventRecord> events = load_event_log(cfg.events_path);
        for (std::size_t i = 0; i < events.size(); ++i) merged.push_back({std::move(events[i]), 1, i});
        if (!cfg.prices_path.empty()) {
            std::vector<EventRecord> feed = load_event_log(cfg.prices_path);
            for (std::size_t i = 0; i < feed.size(); ++i) {
                if (feed[i].kind != EventRecord::Kind::price_update)
                    fail(Errc::bad_config, "price feed may only contain price_update records");
                merged.push_back({std::move(feed[i]), 0, i});
            }
        }
        std::stable_sort(merged.begin(), merged.end(), [](const Tagged& a, const Tagged& b) {
            if (a.rec.timestamp != b.rec.timestamp) return a.rec.timestamp < b.rec.timestamp;
            return a.source < b.source;
        });
    }

    SimulationResult result;
    SimulationReport& report = result.report;
    report.total_events = merged.size();

    // Window ledger over the whole run.
    Vec q_start = pool.reserves_nofee();
    Vec hold_q = q_start;
    Vec trade_sum = vec::zeros(n);
    Vec prices = cfg.initial_prices;

    // Per-LP hold flows (initial holdings plus own quotes).
    std::map<std::string, Vec> lp_hold = pool.lp_holdings();

    auto make_ledger = [&]() {
        WindowLedger ledger;
        ledger.q_start = q_start;
        ledger.hold_q = hold_q;
        ledger.q_end_nofee = pool.reserves_nofee();
        ledger.trade_sum = trade_sum;
        ledger.fee_sum = pool.cumulative_lp_fees();
        ledger.prices_end = prices;
        ledger.spot_end = pool.spot_matrix(nullptr);
        return ledger;
    };

    auto emit = [&](Timestamp ts) {
        WindowLedger ledger = make_ledger();
        for (const auto& numeraire : cfg.numeraires)
            result.series.push_back(guarded_snapshot(ledger, numeraire, ts));
    };

    const FeeParams zero_fees{0.0, 0.0};
    Timestamp t0 = merged.empty() ? 0 : merged.front().rec.timestamp;
    Timestamp last_ts = merged.empty() ? 0 : merged.back().rec.timestamp;
    Timestamp next_sample = t0;

    for (std::size_t idx = 0; idx < merged.size(); ++idx) {
        const EventRecord& rec = merged[idx].rec;
        while (rec.timestamp > next_sample) {
            emit(next_sample);
            next_sample += cfg.sampling_period;
        }

        try {
            switch (rec.kind) {
                case EventRecord::Kind::trade: {
                    if (rec.deltas.size() != n) fail(Errc::dimension_mismatch, "trade dimension");
                    TradeEvent event{rec.deltas, AssetIndex(rec.solve_for), rec.timestamp};
                    ValidatedTrade trade = validate_trade(event, n);
                    Vec solved = pool.apply_trade_event(trade, nullptr);
                    for (std::size_t i = 0; i < n; ++i) trade_sum[i] += solved[i];
                    break;
                }
                case EventRecord::Kind::quote: {
                    if (rec.deltas.size() != n) fail(Errc::dimension_mismatch, "quote dimension");
                    QuoteEvent event{rec.deltas, rec.lp_id, rec.timestamp};
                    pool.apply_quote_event(event);
                    for (std::size_t i = 0; i < n; ++i) hold_q[i] += rec.deltas[i];
                    auto it = lp_hold.emplace(rec.lp_id, vec::zeros(n)).first;
                    for (std::size_t i = 0; i < n; ++i) it->second[i] += rec.deltas[i];
                    break;
                }
                case EventRecord::Kind::price_update: {
                    if (rec.prices.size() != n) fail(Errc::dimension_mismatch, "price dimension");
                    if (!vec::all_positive(rec.prices)) fail(Errc::non_finite, "prices must be positive");
                    prices = rec.prices;
                    if (cfg.equilibrate_each_price_update) {
                        auto trade = pool.equilibration_trade(prices, cfg.equilibration_mode, rec.timestamp);
                        if (trade) {
                            ValidatedTrade vt = validate_trade(*trade, n);
                            bool fee_free = cfg.equilibration_mode == EquilibrationMode::fee_free;
                            Vec solved = pool.apply_trade_event(vt, fee_free ? &zero_fees : nullptr);
                            for (std::size_t i = 0; i < n; ++i) trade_sum[i] += solved[i];
                            ++report.injected_arbitrage_trades;
                        }
                    }
                    break;
                }
            }
            ++report.applied;
        } catch (const SimError& e) {
            report.rejected.push_back({idx, rec.line, e.what()});
        }
    }

    while (next_sample <= last_ts) {
        emit(next_sample);
        next_sample += cfg.sampling_period;
    }

    // Final report.
    report.total_lp_fees = pool.cumulative_lp_fees();
    report.total_treasury = pool.treasury();
    report.final_reserves_nofee = pool.reserves_nofee();
    {
        WindowLedger ledger = make_ledger();
        for (const auto& numeraire : cfg.numeraires)
            report.final_metrics.push_back(guarded_snapshot(ledger, numeraire, last_ts));

        auto holdings_end = pool.lp_holdings();
        auto fees_end = pool.lp_fees();
        for (const auto& [lp, hold] : lp_hold) {
            LpOutcome outcome;
            outcome.lp_id = lp;
            outcome.fees_earned = vec::zeros(n);
            if (auto it = fees_end.find(lp); it != fees_end.end()) outcome.fees_earned = it->second;

            WindowLedger lp_ledger = ledger;
            lp_ledger.hold_q = hold;
            lp_ledger.q_end_nofee =
                holdings_end.count(lp) ? holdings_end.at(lp) : vec::zeros(n);
            lp_ledger.fee_sum = outcome.fees_earned;
            try {
                outcome.farv = lp_relative_value(lp_ledger, Numeraire::fiat());
            } catch (const SimError& e) {
                if (e.code() != Errc::zero_hold_value) throw;
            }
            report.lp_outcomes.push_back(std::move(outcome));
        }
    }
    return result;
}

void export_series(const std::vector<MetricSnapshot>& series, const std::string& path) {
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";

    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(Errc::io_error, "cannot write '" + tmp.string() + "'");
        out << "timestamp,numeraire,hold_value,pool_value,pool_value_with_fees,il,rv,farv\n";
        char buf[512];
        for (const auto& snap : series) {
            std::snprintf(buf, sizeof(buf), "%lld,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          static_cast<long long>(snap.timestamp), snap.numeraire.label().c_str(),
                          snap.hold_value, snap.pool_value, snap.pool_value_with_fees, snap.il,
                          snap.rv, snap.farv);
            out << buf;
        }
        if (!out) fail(Errc::io_error, "write failed for '" + tmp.string() + "'");
    }

    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) fail(Errc::io_error, "cannot move series into place: " + ec.message());
}

} // namespace poolsim
