#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace brw {

// Shortest text that reads back to the same double ("inf", "nan" for
// non-finite values). Locale independent, so CSV bodies are reproducible.
std::string format_double(double v);

// Quotes a field when it holds a comma, quote or newline.
std::string csv_field(std::string_view text);

// Small in-memory CSV table.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  // Throws ValidationError when the width does not match the header.
  void add_row(std::vector<std::string> row);
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& data() const { return rows_; }

  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace brw
