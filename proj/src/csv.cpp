#include "spkg/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace spkg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

const std::string& CsvRecord::at(int column, const std::string& path) const {
  if (column < 0 || column >= static_cast<int>(fields.size())) throw CsvError(path, line, "missing column");
  return fields[column];
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  throw CsvError(path, 1, "missing column '" + name + "'");
}

CsvTable read_csv(const std::string& path, bool header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable table;
  table.path = path;
  std::string line;
  int number = 0;
  bool need_header = header;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (need_header) {
      table.header = split(t);
      need_header = false;
      continue;
    }
    table.records.push_back({number, split(t)});
  }
  if (need_header) throw CsvError(path, number, "file is empty");
  return table;
}

double parse_double(const std::string& field, const std::string& path, int line) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) throw CsvError(path, line, "not a number: '" + field + "'");
  return v;
}

int parse_int(const std::string& field, const std::string& path, int line) {
  int v = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) throw CsvError(path, line, "not an integer: '" + field + "'");
  return v;
}

}  // namespace spkg
