#pragma once

#include <string>

#include "json.hpp"

#include "exchopt/model.hpp"

namespace exchopt {

using json = nlohmann::ordered_json;

/// Parses a model document. Unknown or missing fields, wrong types and JSON
/// syntax errors raise MalformedInput naming the line or the field path;
/// parameter violations raise the model_core error codes.
TwoAssetModel parse_model(const json& doc);
TwoAssetModel parse_model_text(const std::string& text);
TwoAssetModel load_model(const std::string& path);

json model_to_json(const TwoAssetModel& m);

/// Reads a whole file; MalformedInput when it cannot be opened.
std::string read_file(const std::string& path);

/// Truncates and writes `path`; InvalidParameter when it cannot be created.
void write_file(const std::string& path, const std::string& text);

} // namespace exchopt
