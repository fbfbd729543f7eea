#include "procnav/error.hpp"

namespace procnav {

std::string_view code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::duplicate_id: return "duplicate-id";
        case ErrorCode::invalid_bbox: return "invalid-bbox";
        case ErrorCode::invalid_element: return "invalid-element";
        case ErrorCode::unknown_id: return "unknown-id";
        case ErrorCode::cycle_introduced: return "cycle-introduced";
        case ErrorCode::parent_not_container: return "parent-not-container";
        case ErrorCode::element_not_visible: return "element-not-visible";
        case ErrorCode::malformed_format: return "malformed-format";
        case ErrorCode::grammar_mismatch: return "grammar-mismatch";
        case ErrorCode::non_contiguous_numbering: return "non-contiguous-numbering";
        case ErrorCode::empty_input: return "empty-input";
        case ErrorCode::hook_output_invalid: return "hook-output-invalid";
        case ErrorCode::target_not_found: return "target-not-found";
        case ErrorCode::ambiguous_target: return "ambiguous-target";
        case ErrorCode::session_closed: return "session-closed";
        case ErrorCode::unknown_session: return "unknown-session";
        case ErrorCode::time_regression: return "time-regression";
        case ErrorCode::malformed_line: return "malformed-line";
        case ErrorCode::invalid_event: return "invalid-event";
        case ErrorCode::fault_missing_step: return "fault-refers-to-missing-step";
        case ErrorCode::fault_invalid: return "fault-invalid";
        case ErrorCode::duplicate_marker: return "duplicate-marker";
        case ErrorCode::invalid_marker: return "invalid-marker";
        case ErrorCode::scenario_mismatch: return "scenario-mismatch";
        case ErrorCode::nonpositive_width: return "nonpositive-width";
        case ErrorCode::invalid_params: return "invalid-params";
        case ErrorCode::out_of_range: return "out-of-range";
        case ErrorCode::incomplete_pairs: return "incomplete-pairs";
        case ErrorCode::empty_sample: return "empty-sample";
        case ErrorCode::non_finite_value: return "non-finite-value";
        case ErrorCode::transport_failure: return "transport-failure";
        case ErrorCode::state_mismatch: return "state-mismatch";
        case ErrorCode::io_error: return "io-error";
    }
    return "unknown";
}

}  // namespace procnav
