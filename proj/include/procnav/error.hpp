#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace procnav {

// Stable error codes. The CLI prints code_name() and the service maps them to
// HTTP statuses, so existing names must not change.
enum class ErrorCode {
    duplicate_id,
    invalid_bbox,
    invalid_element,
    unknown_id,
    cycle_introduced,
    parent_not_container,
    element_not_visible,
    malformed_format,
    grammar_mismatch,
    non_contiguous_numbering,
    empty_input,
    hook_output_invalid,
    target_not_found,
    ambiguous_target,
    session_closed,
    unknown_session,
    time_regression,
    malformed_line,
    invalid_event,
    fault_missing_step,
    fault_invalid,
    duplicate_marker,
    invalid_marker,
    scenario_mismatch,
    nonpositive_width,
    invalid_params,
    out_of_range,
    incomplete_pairs,
    empty_sample,
    non_finite_value,
    transport_failure,
    state_mismatch,
    io_error,
};

std::string_view code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace procnav
