#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "procnav/error.hpp"

namespace procnav {

enum class Comparator { equals };

// One "Check whether the value of parameter P under System Panel is V U." line.
struct TaskStep {
    int index = 0;  // 1-based
    std::string system;
    std::string panel;  // as written, e.g. "2 LAB DW001"
    std::string parameter;
    double expected_value = 0;
    std::string unit;  // canonical unit token, empty when dimensionless
    Comparator comparator = Comparator::equals;
    friend bool operator==(const TaskStep&, const TaskStep&) = default;
};

struct ProcedureDoc {
    std::string scenario_id;
    std::vector<TaskStep> steps;
    friend bool operator==(const ProcedureDoc&, const ProcedureDoc&) = default;
};

// Units accepted in a TaskStep. Degrees Celsius is stored as "degC".
const std::vector<std::string>& unit_lexicon();
std::optional<std::string> canonical_unit(std::string_view written);
// Inverse of canonical_unit for display: "degC" -> "°C".
std::string display_unit(std::string_view canonical);

const std::vector<std::string>& default_system_lexicon();

// Shortest decimal text that round-trips the double, e.g. 7018684.0 -> "7018684".
std::string canonical_decimal(double value);
// The same canonical form computed textually from a source literal.
std::string canonical_decimal_literal(std::string_view literal);

class ParseError : public Error {
  public:
    ParseError(ErrorCode code, int line, const std::string& reason)
        : Error(code, "line " + std::to_string(line) + ": " + reason), line_(line) {}
    int line() const noexcept { return line_; }

  private:
    int line_;
};

struct ScenarioFailure {
    std::size_t scenario;  // 1-based position in the input list
    std::string message;
};

class ScenarioParseError : public Error {
  public:
    explicit ScenarioParseError(std::vector<ScenarioFailure> failures);
    const std::vector<ScenarioFailure>& failures() const noexcept { return failures_; }

  private:
    std::vector<ScenarioFailure> failures_;
};

// Throws ParseError (grammar_mismatch, non_contiguous_numbering, empty_input).
ProcedureDoc parse_procedure(std::string_view text, std::string scenario_id = {},
                             const std::vector<std::string>& systems = default_system_lexicon());

// Scenario ids default to S1..Sn. All failures are collected before throwing.
std::vector<ProcedureDoc> parse_all_scenarios(const std::vector<std::string>& texts,
                                              const std::vector<std::string>& systems = default_system_lexicon());

// Throws hook_output_invalid naming the first failing invariant.
void validate_procedure(const ProcedureDoc& doc);

using ExtractorHook = std::function<ProcedureDoc(std::string_view)>;

// Extension point for alternative procedure extractors. Output of the hook is
// re-validated before it is accepted.
class ProcedureExtractor {
  public:
    void register_extractor(ExtractorHook hook) { hook_ = std::move(hook); }
    bool has_extractor() const noexcept { return bool(hook_); }
    // Falls back to the built-in grammar when no hook is registered.
    ProcedureDoc extract_with_hook(std::string_view text) const;

  private:
    ExtractorHook hook_;
};

}  // namespace procnav
