#include "spkg/json_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace spkg {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

json to_json_vector(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json_matrix(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(to_json_vector(m.row(i).transpose()));
  return out;
}

namespace {

double number_at(const json& v, const std::string& key) {
  if (!v.is_number()) throw ValidationError(key, key + " must contain only numbers");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(key, key + " must be finite");
  return d;
}

}  // namespace

Vector vector_from_json(const json& doc, const std::string& key) {
  if (!doc.is_object() || !doc.contains(key)) throw ValidationError(key, "missing field '" + key + "'");
  const json& arr = doc.at(key);
  if (!arr.is_array()) throw ValidationError(key, key + " must be an array");
  Vector v(static_cast<Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Index>(i)) = number_at(arr[i], key);
  return v;
}

Matrix matrix_from_json(const json& doc, const std::string& key) {
  if (!doc.is_object() || !doc.contains(key)) throw ValidationError(key, "missing field '" + key + "'");
  const json& rows = doc.at(key);
  if (!rows.is_array()) throw ValidationError(key, key + " must be an array of rows");
  const std::size_t n = rows.size();
  const std::size_t m = n ? (rows[0].is_array() ? rows[0].size() : 0) : 0;
  Matrix out(static_cast<Index>(n), static_cast<Index>(m));
  for (std::size_t i = 0; i < n; ++i) {
    if (!rows[i].is_array() || rows[i].size() != m) throw ValidationError(key, key + " rows must have equal length");
    for (std::size_t j = 0; j < m; ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = number_at(rows[i][j], key);
  }
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("json", path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& doc, int indent) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << doc.dump(indent) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace spkg
