#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stdic/engine.hpp"
#include "stdic/synth.hpp"

namespace stdic {

// Shortest text that round-trips the double ("%.17g").
std::string format_double(double v);

// RFC-4180 writer: CRLF-free (LF) rows, fields quoted only when they hold a
// comma, quote or line break.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void row(std::span<const std::string> fields);
  void row(std::initializer_list<std::string> fields) { row(std::span<const std::string>(fields.begin(), fields.size())); }

 private:
  std::ostream& out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws Parse when the column is absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

// Throws Parse on malformed quoting or ragged rows.
CsvTable parse_csv(std::istream& in);
// Throws Io when the file cannot be opened.
CsvTable read_csv_file(const std::filesystem::path& path);

// Columns: frame,x,y,converged,iterations,residual_norm,u,v, then the other u
// and v parameters in monomial order.
std::vector<std::string> field_csv_header(const ShapeFunctionSpec& spec);
void write_field_csv(std::ostream& out, std::span<const DisplacementField> fields);
// Parameters come back by name; the spec is inferred from the columns when
// `spec` is empty (window then set to the smallest admissible value).
std::vector<DisplacementField> read_field_csv(const std::filesystem::path& path,
                                              std::optional<ShapeFunctionSpec> spec = std::nullopt);

// Columns: frame,t_seconds,u_true,v_true,exx_true,eyy_true,cx,cy.
void write_truth_csv(std::ostream& out, const GroundTruth& truth);
GroundTruth read_truth_csv(const std::filesystem::path& path);

// Plain "key=value" lines.
void write_key_values(std::ostream& out, const std::map<std::string, std::string>& values);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

}  // namespace stdic
