// Event-log ingestion, price-feed alignment, deterministic simulation
// driving and metric-series persistence.
//
// Event log: UTF-8, one self-describing record per line, '#' comments.
//   trade <timestamp> <d1> ... <dN>       one delta is the literal "null"
//   quote <timestamp> <lp_id> <d1> ... <dN>
//   price_update <timestamp> <p1> ... <pN>
// Quantities are decimal strings parsed to nearest double. Timestamps must
// be non-decreasing; ties keep log order, and price-feed records sort
// before user events at equal timestamps.
#pragma once

#include <iosfwd>
#include <optional>

#include "poolsim/arbitrage.hpp"
#include "poolsim/metrics.hpp"

namespace poolsim {

struct EventRecord {
    enum class Kind { trade, quote, price_update };
    Kind kind{Kind::trade};
    Timestamp timestamp{0};
    Vec deltas;            // trade (solve leg zeroed) or quote payload
    int solve_for{0};      // trade: 1-based index of the "null" leg
    std::string lp_id;     // quote
    Vec prices;            // price_update
    std::size_t line{0};   // source line, for diagnostics
};

std::vector<EventRecord> parse_event_log(std::istream& in, const std::string& source_name);
std::vector<EventRecord> load_event_log(const std::string& path);

struct SimulationConfig {
    // [pool]
    CfmmKind kind{CfmmKind::ConstantProduct};
    Vec weights;
    FeeParams fees;
    Vec initial_quantities;
    std::string initial_lp{"lp0"};
    Vec initial_prices;  // defaults to all ones

    // [grid] — presence selects a concentrated pool
    bool concentrated{false};
    Vec grid_ticks;
    double grid_min{0.0}, grid_max{0.0}, grid_ratio{0.0};
    double initial_price{0.0};

    struct PositionSpec {
        std::string lp_id;
        double lower{0.0}, upper{0.0};
        Vec quantities;
    };
    std::vector<PositionSpec> positions;

    // [run]
    std::string events_path;
    std::string prices_path;
    Timestamp sampling_period{60};
    bool equilibrate_each_price_update{false};
    EquilibrationMode equilibration_mode{EquilibrationMode::fee_free};
    std::string output_path;
    std::vector<Numeraire> numeraires;  // default: fiat then every asset

    std::size_t n_assets() const;
};

// Flat key=value sections; unknown sections or keys are errors. Relative
// file paths are resolved against the config file's directory.
SimulationConfig parse_config(std::istream& in, const std::string& source_name);
SimulationConfig load_config(const std::string& path);

struct RejectedEvent {
    std::size_t index{0};  // position in the merged event stream
    std::size_t line{0};
    std::string reason;
};

struct LpOutcome {
    std::string lp_id;
    // Fee-adjusted relative value in fiat; empty when the LP has no
    // measurable hold value over the window.
    std::optional<double> farv;
    Vec fees_earned;
};

struct SimulationReport {
    std::size_t total_events{0};
    std::size_t applied{0};
    std::vector<RejectedEvent> rejected;
    std::size_t injected_arbitrage_trades{0};
    Vec total_lp_fees;
    Vec total_treasury;
    Vec final_reserves_nofee;
    std::vector<MetricSnapshot> final_metrics;  // one per configured numeraire
    std::vector<LpOutcome> lp_outcomes;         // sorted by lp_id
};

struct SimulationResult {
    std::vector<MetricSnapshot> series;
    SimulationReport report;
};

// Deterministic: identical config and logs produce identical results, and
// export_series writes byte-identical files for them.
SimulationResult run_simulation(const SimulationConfig& config);

// Delimiter-separated series, 17 significant digits, written to a temporary
// file and renamed so failures never leave partial output.
void export_series(const std::vector<MetricSnapshot>& series, const std::string& path);

} // namespace poolsim
