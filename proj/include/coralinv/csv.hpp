#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coralinv {

class FileNotFound : public std::runtime_error {
 public:
  explicit FileNotFound(const std::string& path)
      : std::runtime_error("file not found: " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);
std::vector<std::string> split_csv_line(std::string_view line);
std::string trim(std::string_view s);
double parse_double(std::string_view s, std::string_view context);

/// Nine significant digits, shortest of fixed/exponent form.
std::string format_double(double v);

/// Shortest text that parses back to exactly `v`.
std::string format_double_exact(double v);

void write_text_file(const std::string& path, const std::string& contents);

}  // namespace coralinv
