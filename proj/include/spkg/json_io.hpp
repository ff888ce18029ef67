#pragma once

// JSON and number formatting helpers shared by the prior bundle, experiment
// configuration, results export and the advisor's session files.

#include <string>

#include <json.hpp>

#include "spkg/linalg.hpp"

namespace spkg {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

nlohmann::json to_json_vector(const Vector& v);
nlohmann::json to_json_matrix(const Matrix& m);

/// Reads doc[key] as a numeric array / array of equal-length rows.
/// ValidationError(key, ...) on a missing key or malformed content.
Vector vector_from_json(const nlohmann::json& doc, const std::string& key);
Matrix matrix_from_json(const nlohmann::json& doc, const std::string& key);

/// Parses a file; parse errors become ValidationError with the byte offset.
nlohmann::json read_json_file(const std::string& path);
/// Writes to a temporary sibling and renames it into place.
void write_json_file(const std::string& path, const nlohmann::json& doc, int indent = -1);

}  // namespace spkg
