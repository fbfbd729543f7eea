#include "procnav/serialization.hpp"

#include <algorithm>
#include <cmath>

#include "procnav/error.hpp"

namespace procnav {

namespace {

[[noreturn]] void malformed(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::malformed_format, where + ": " + what);
}

}  // namespace

const Json& json_field(const Json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) malformed(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) malformed(where + "/" + key, "missing field");
    return *it;
}

std::string json_string(const Json& obj, const char* key, const std::string& where) {
    const auto& v = json_field(obj, key, where);
    if (!v.is_string()) malformed(where + "/" + key, "expected a string");
    return v.get<std::string>();
}

std::int64_t json_int(const Json& obj, const char* key, const std::string& where) {
    const auto& v = json_field(obj, key, where);
    if (!v.is_number_integer()) malformed(where + "/" + key, "expected an integer");
    return v.get<std::int64_t>();
}

double json_number(const Json& obj, const char* key, const std::string& where) {
    const auto& v = json_field(obj, key, where);
    if (!v.is_number()) malformed(where + "/" + key, "expected a number");
    return v.get<double>();
}

void json_reject_unknown(const Json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            malformed(where + "/" + it.key(), "unknown field");
}

Json parse_json_text(std::string_view text, const std::string& what) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        std::size_t line = 1 + std::size_t(std::count(text.begin(), text.begin() + std::min(e.byte, text.size()), '\n'));
        malformed(what + " line " + std::to_string(line), e.what());
    }
}

Json to_json(const TaskStep& step) {
    Json j;
    j["index"] = step.index;
    j["system"] = step.system;
    j["panel"] = step.panel;
    j["parameter"] = step.parameter;
    j["expected_value"] = step.expected_value;
    j["unit"] = step.unit;
    j["comparator"] = "equals";
    return j;
}

TaskStep task_step_from_json(const Json& j, const std::string& where) {
    json_reject_unknown(j, where, {"index", "system", "panel", "parameter", "expected_value", "unit", "comparator"});
    TaskStep s;
    s.index = int(json_int(j, "index", where));
    s.system = json_string(j, "system", where);
    s.panel = json_string(j, "panel", where);
    s.parameter = json_string(j, "parameter", where);
    s.expected_value = json_number(j, "expected_value", where);
    s.unit = json_string(j, "unit", where);
    if (json_string(j, "comparator", where) != "equals") malformed(where + "/comparator", "only 'equals' is supported");
    if (!canonical_unit(s.unit) || *canonical_unit(s.unit) != s.unit) malformed(where + "/unit", "unknown unit");
    return s;
}

Json to_json(const ProcedureDoc& doc) {
    Json j;
    j["scenario"] = doc.scenario_id;
    Json steps = Json::array();
    for (const auto& s : doc.steps) steps.push_back(to_json(s));
    j["steps"] = std::move(steps);
    return j;
}

ProcedureDoc procedure_from_json(const Json& j) {
    json_reject_unknown(j, "", {"scenario", "steps"});
    ProcedureDoc doc;
    doc.scenario_id = json_string(j, "scenario", "");
    const auto& steps = json_field(j, "steps", "");
    if (!steps.is_array()) malformed("/steps", "expected an array");
    for (std::size_t i = 0; i < steps.size(); ++i)
        doc.steps.push_back(task_step_from_json(steps[i], "/steps/" + std::to_string(i)));
    return doc;
}

}  // namespace procnav
