#pragma once

// JSON converters shared by the file formats and the HTTP service.

#include <string>

#include <json.hpp>

#include "procnav/procedures.hpp"

namespace procnav {

using Json = nlohmann::ordered_json;

Json to_json(const TaskStep& step);
// Throws malformed_format naming `where`.
TaskStep task_step_from_json(const Json& j, const std::string& where);

Json to_json(const ProcedureDoc& doc);
ProcedureDoc procedure_from_json(const Json& j);

// Strict field helpers used by the loaders.
const Json& json_field(const Json& obj, const char* key, const std::string& where);
std::string json_string(const Json& obj, const char* key, const std::string& where);
std::int64_t json_int(const Json& obj, const char* key, const std::string& where);
double json_number(const Json& obj, const char* key, const std::string& where);
void json_reject_unknown(const Json& obj, const std::string& where, std::initializer_list<std::string_view> allowed);
Json parse_json_text(std::string_view text, const std::string& what);

}  // namespace procnav
