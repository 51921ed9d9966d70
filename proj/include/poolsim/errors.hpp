// Error codes and the exception type shared by all poolsim modules.
#pragma once

#include <stdexcept>
#include <string>

namespace poolsim {

enum class Errc {
    // event validation
    all_zero_trade,
    non_finite,
    bad_solve_index,
    mixed_signs,
    disproportionate_quote,
    overdraw,
    unknown_lp,
    zero_value_pool,
    dimension_mismatch,
    // cfmm / solving
    non_positive_quantity,
    insolvent_trade,
    solver_no_converge,
    no_bracket,
    bad_spec,
    // concentrated liquidity
    off_grid_range,
    price_off_grid,
    unsupported_spec,
    inconsistent_depth,
    liquidity_exhausted,
    empty_range,
    // metrics
    zero_hold_value,
    inconsistent_ledger,
    unsupported_weights,
    // replay / io
    parse_error,
    non_monotone_timestamps,
    io_error,
    bad_config,
};

const char* errc_name(Errc code) noexcept;

class SimError : public std::runtime_error {
public:
    SimError(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
    throw SimError(code, what);
}

} // namespace poolsim
