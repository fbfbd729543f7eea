#include "procnav/procedures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace procnav {

namespace {

constexpr std::string_view kLead = "Check whether the value of parameter ";

std::string collapse_spaces(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\r') {
            space = true;
            continue;
        }
        if (space && !out.empty()) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

TaskStep parse_line(const std::string& line, int line_no, const std::vector<std::string>& systems) {
    auto fail = [&](const std::string& reason) -> TaskStep {
        throw ParseError(ErrorCode::grammar_mismatch, line_no, reason);
    };
    std::string_view rest = line;

    std::size_t digits = 0;
    while (digits < rest.size() && rest[digits] >= '0' && rest[digits] <= '9') ++digits;
    if (digits == 0 || digits > 6 || digits >= rest.size() || rest[digits] != '.')
        return fail("expected a step number like '1.'");
    TaskStep step;
    std::from_chars(rest.data(), rest.data() + digits, step.index);
    rest.remove_prefix(digits + 1);
    rest = trim(rest);

    if (rest.substr(0, kLead.size()) != kLead) return fail("expected 'Check whether the value of parameter'");
    rest.remove_prefix(kLead.size());

    auto under = rest.find(" under ");
    if (under == std::string_view::npos) return fail("missing 'under <system> <panel>'");
    step.parameter = std::string(trim(rest.substr(0, under)));
    rest.remove_prefix(under + 7);

    auto is = rest.rfind(" is ");
    if (is == std::string_view::npos) return fail("missing 'is <value>'");
    std::string_view location = trim(rest.substr(0, is));
    std::string_view value = trim(rest.substr(is + 4));

    std::size_t best = 0;
    for (const auto& sys : systems) {
        if (sys.size() <= best || location.size() <= sys.size()) continue;
        if (location.substr(0, sys.size()) == sys && location[sys.size()] == ' ') {
            best = sys.size();
            step.system = sys;
        }
    }
    if (step.system.empty()) return fail("no known system name before the panel in '" + std::string(location) + "'");
    step.panel = std::string(trim(location.substr(best)));
    if (step.parameter.empty()) return fail("empty parameter");
    if (step.panel.empty()) return fail("empty panel");

    if (value.empty() || value.back() != '.') return fail("expected the sentence to end with '.'");
    value.remove_suffix(1);
    value = trim(value);
    double number = 0;
    auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), number);
    if (ec != std::errc{} || end == value.data()) return fail("expected a decimal value");
    if (!std::isfinite(number)) return fail("value is not finite");
    step.expected_value = number;
    std::string_view unit = trim(std::string_view(end, std::size_t(value.data() + value.size() - end)));
    auto canon = canonical_unit(unit);
    if (!canon) return fail("unknown unit '" + std::string(unit) + "'");
    step.unit = *canon;
    return step;
}

}  // namespace

const std::vector<std::string>& unit_lexicon() {
    static const std::vector<std::string> units = {"MPa", "kPa", "Pa", "kg/s", "degC", "A", "V", "kV", "MVar", "m"};
    return units;
}

std::optional<std::string> canonical_unit(std::string_view written) {
    if (written.empty()) return std::string{};
    if (written == "°C" || written == "° C" || written == "℃" || written == "degC" || written == "deg C")
        return std::string("degC");
    const auto& units = unit_lexicon();
    if (std::find(units.begin(), units.end(), written) != units.end()) return std::string(written);
    return std::nullopt;
}

std::string display_unit(std::string_view canonical) {
    if (canonical == "degC") return "°C";
    return std::string(canonical);
}

const std::vector<std::string>& default_system_lexicon() {
    static const std::vector<std::string> systems = {"Nuclear Island System", "Auxiliary System",
                                                     "Conventional Island System", "Electrical System"};
    return systems;
}

std::string canonical_decimal(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

std::string canonical_decimal_literal(std::string_view literal) {
    std::string sign;
    if (!literal.empty() && (literal.front() == '-' || literal.front() == '+')) {
        if (literal.front() == '-') sign = "-";
        literal.remove_prefix(1);
    }
    std::string_view integer = literal, fraction;
    if (auto dot = literal.find('.'); dot != std::string_view::npos) {
        integer = literal.substr(0, dot);
        fraction = literal.substr(dot + 1);
    }
    while (integer.size() > 1 && integer.front() == '0') integer.remove_prefix(1);
    while (!fraction.empty() && fraction.back() == '0') fraction.remove_suffix(1);
    std::string out = sign + std::string(integer.empty() ? "0" : integer);
    if (!fraction.empty()) out += "." + std::string(fraction);
    return out;
}

ScenarioParseError::ScenarioParseError(std::vector<ScenarioFailure> failures)
    : Error(ErrorCode::grammar_mismatch,
            [&] {
                std::ostringstream msg;
                for (const auto& f : failures) msg << "scenario " << f.scenario << ": " << f.message << "; ";
                return msg.str();
            }()),
      failures_(std::move(failures)) {}

ProcedureDoc parse_procedure(std::string_view text, std::string scenario_id, const std::vector<std::string>& systems) {
    ProcedureDoc doc;
    doc.scenario_id = std::move(scenario_id);
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        std::string line = collapse_spaces(raw);
        if (line.empty()) continue;
        TaskStep step = parse_line(line, line_no, systems);
        int expected = int(doc.steps.size()) + 1;
        if (step.index != expected)
            throw ParseError(ErrorCode::non_contiguous_numbering, line_no,
                             "expected step " + std::to_string(expected) + ", found " + std::to_string(step.index));
        doc.steps.push_back(std::move(step));
    }
    if (doc.steps.empty()) throw ParseError(ErrorCode::empty_input, 0, "no procedure steps");
    return doc;
}

std::vector<ProcedureDoc> parse_all_scenarios(const std::vector<std::string>& texts,
                                              const std::vector<std::string>& systems) {
    std::vector<ProcedureDoc> docs;
    std::vector<ScenarioFailure> failures;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        try {
            docs.push_back(parse_procedure(texts[i], "S" + std::to_string(i + 1), systems));
        } catch (const Error& e) {
            failures.push_back({i + 1, e.what()});
        }
    }
    if (!failures.empty()) throw ScenarioParseError(std::move(failures));
    return docs;
}

void validate_procedure(const ProcedureDoc& doc) {
    auto invalid = [](const std::string& what) { throw Error(ErrorCode::hook_output_invalid, what); };
    for (std::size_t i = 0; i < doc.steps.size(); ++i) {
        const auto& s = doc.steps[i];
        const std::string at = "step " + std::to_string(i + 1) + ": ";
        if (s.index < 1) invalid(at + "index must be >= 1");
        if (s.index != int(i) + 1) invalid(at + "indices must be contiguous from 1");
        if (s.system.empty()) invalid(at + "system must be non-empty");
        if (s.panel.empty()) invalid(at + "panel must be non-empty");
        if (s.parameter.empty()) invalid(at + "parameter must be non-empty");
        if (!std::isfinite(s.expected_value)) invalid(at + "expected_value must be finite");
        const auto& units = unit_lexicon();
        if (!s.unit.empty() && std::find(units.begin(), units.end(), s.unit) == units.end())
            invalid(at + "unit '" + s.unit + "' is not in the unit lexicon");
    }
}

ProcedureDoc ProcedureExtractor::extract_with_hook(std::string_view text) const {
    if (!hook_) return parse_procedure(text);
    ProcedureDoc doc = hook_(text);
    validate_procedure(doc);
    return doc;
}

}  // namespace procnav
