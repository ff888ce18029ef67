#pragma once

// Minimal comma-separated reader for the numeric input files (no quoting).

#include <stdexcept>
#include <string>
#include <vector>

namespace spkg {

/// Malformed CSV input; the message carries path and 1-based line number.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& path, int line, const std::string& message)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + message), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct CsvRecord {
  int line = 0;
  std::vector<std::string> fields;

  const std::string& at(int column, const std::string& path) const;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRecord> records;

  /// Index of a header column; throws CsvError when absent.
  int column(const std::string& name) const;
  std::string path;
};

/// Reads `path`, skipping blank lines and lines starting with '#'. Fields are trimmed.
CsvTable read_csv(const std::string& path, bool header = true);

double parse_double(const std::string& field, const std::string& path, int line);
int parse_int(const std::string& field, const std::string& path, int line);

}  // namespace spkg
