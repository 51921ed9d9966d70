#include "poolsim/errors.hpp"

namespace poolsim {

const char* errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::all_zero_trade: return "AllZeroTrade";
        case Errc::non_finite: return "NonFinite";
        case Errc::bad_solve_index: return "BadSolveIndex";
        case Errc::mixed_signs: return "MixedSigns";
        case Errc::disproportionate_quote: return "DisproportionateQuote";
        case Errc::overdraw: return "Overdraw";
        case Errc::unknown_lp: return "UnknownLp";
        case Errc::zero_value_pool: return "ZeroValuePool";
        case Errc::dimension_mismatch: return "DimensionMismatch";
        case Errc::non_positive_quantity: return "NonPositiveQuantity";
        case Errc::insolvent_trade: return "InsolventTrade";
        case Errc::solver_no_converge: return "SolverNoConverge";
        case Errc::no_bracket: return "NoBracket";
        case Errc::bad_spec: return "BadSpec";
        case Errc::off_grid_range: return "OffGridRange";
        case Errc::price_off_grid: return "PriceOffGrid";
        case Errc::unsupported_spec: return "UnsupportedSpec";
        case Errc::inconsistent_depth: return "InconsistentDepth";
        case Errc::liquidity_exhausted: return "LiquidityExhausted";
        case Errc::empty_range: return "EmptyRange";
        case Errc::zero_hold_value: return "ZeroHoldValue";
        case Errc::inconsistent_ledger: return "InconsistentLedger";
        case Errc::unsupported_weights: return "UnsupportedWeights";
        case Errc::parse_error: return "ParseError";
        case Errc::non_monotone_timestamps: return "NonMonotoneTimestamps";
        case Errc::io_error: return "IoError";
        case Errc::bad_config: return "BadConfig";
    }
    return "UnknownError";
}

} // namespace poolsim
