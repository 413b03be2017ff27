#include "stdic/csv.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "stdic/error.hpp"

namespace stdic {

namespace {

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "bad number '" + s + "' in column " + what);
  }
}

int parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "bad integer '" + s + "' in column " + what);
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

ShapeFunctionSpec infer_spec(const CsvTable& t) {
  const int spatial = t.has_column("uxx") ? 2 : (t.has_column("ux") ? 1 : 0);
  const int temporal = t.has_column("utt") ? 2 : (t.has_column("ut") ? 1 : 0);
  const CrossTerms cross{t.has_column("uxt"), t.has_column("uyt")};
  const int window = temporal > 0 || cross.any() ? 3 : 1;
  return ShapeFunctionSpec(spatial, temporal, cross, window);
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void CsvWriter::row(std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out_ << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out_ << f;
      continue;
    }
    out_ << '"';
    for (const char c : f) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
  }
  out_ << '\n';
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorCode::Parse, "missing CSV column '" + name + "'");
}

bool CsvTable::has_column(const std::string& name) const {
  for (const auto& h : header) {
    if (h == name) return true;
  }
  return false;
}

CsvTable parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool after_quote = false;
  bool any = false;
  char c;
  const auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    after_quote = false;
  };
  const auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
    any = false;
  };
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == ',') {
      end_field();
      any = true;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      end_record();
    } else if (c == '\n') {
      end_record();
    } else if (c == '"') {
      if (!field.empty() || after_quote) throw Error(ErrorCode::Parse, "stray quote inside CSV field");
      quoted = true;
      any = true;
    } else {
      if (after_quote) throw Error(ErrorCode::Parse, "text after closing quote in CSV field");
      field.push_back(c);
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::Parse, "unterminated quoted CSV field");
  if (any || !field.empty()) end_record();

  CsvTable table;
  if (records.empty()) throw Error(ErrorCode::Parse, "CSV has no header row");
  table.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != table.header.size()) {
      throw Error(ErrorCode::Parse, "CSV row " + std::to_string(i + 1) + " has " + std::to_string(records[i].size()) +
                                        " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[i]));
  }
  return table;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_csv(in);
}

std::vector<std::string> field_csv_header(const ShapeFunctionSpec& spec) {
  std::vector<std::string> h = {"frame", "x", "y", "converged", "iterations", "residual_norm", "u", "v"};
  const auto names = param_names(spec);
  const auto k = static_cast<std::size_t>(spec.basis_size());
  for (std::size_t i = 1; i < k; ++i) h.push_back(names[i]);
  for (std::size_t i = 1; i < k; ++i) h.push_back(names[k + i]);
  return h;
}

void write_field_csv(std::ostream& out, std::span<const DisplacementField> fields) {
  CsvWriter w(out);
  if (fields.empty()) return;
  const ShapeFunctionSpec& spec = fields.front().spec;
  w.row(field_csv_header(spec));
  const int k = spec.basis_size();
  std::vector<std::string> row;
  for (const DisplacementField& f : fields) {
    if (!(f.spec == spec)) throw Error(ErrorCode::InvalidArgument, "fields in one CSV must share a shape function");
    for (const PointResult& p : f.points) {
      const SolveOutcome& o = p.outcome;
      row.clear();
      row.push_back(std::to_string(f.frame_index));
      row.push_back(std::to_string(p.x));
      row.push_back(std::to_string(p.y));
      row.push_back(o.converged ? "true" : "false");
      row.push_back(std::to_string(o.iterations));
      row.push_back(format_double(o.final_residual_norm));
      row.push_back(format_double(o.params.u(0)));
      row.push_back(format_double(o.params.v(0)));
      for (int i = 1; i < k; ++i) row.push_back(format_double(o.params.u(i)));
      for (int i = 1; i < k; ++i) row.push_back(format_double(o.params.v(i)));
      w.row(row);
    }
  }
}

std::vector<DisplacementField> read_field_csv(const std::filesystem::path& path,
                                              std::optional<ShapeFunctionSpec> spec) {
  const CsvTable t = read_csv_file(path);
  const ShapeFunctionSpec s = spec ? *spec : infer_spec(t);
  const auto names = param_names(s);
  const int k = s.basis_size();
  std::vector<std::size_t> pcol;
  for (const auto& n : names) pcol.push_back(t.column(n));
  const std::size_t cf = t.column("frame");
  const std::size_t cx = t.column("x");
  const std::size_t cy = t.column("y");
  const std::size_t cc = t.column("converged");
  const std::size_t ci = t.column("iterations");
  const std::size_t cr = t.column("residual_norm");

  std::vector<DisplacementField> fields;
  for (const auto& r : t.rows) {
    const int frame = parse_int(r[cf], "frame");
    if (fields.empty() || fields.back().frame_index != frame) {
      DisplacementField f;
      f.frame_index = frame;
      f.spec = s;
      fields.push_back(std::move(f));
    }
    PointResult p;
    p.x = parse_int(r[cx], "x");
    p.y = parse_int(r[cy], "y");
    if (r[cc] != "true" && r[cc] != "false") throw Error(ErrorCode::Parse, "converged must be true/false");
    p.outcome.converged = r[cc] == "true";
    p.outcome.iterations = parse_int(r[ci], "iterations");
    p.outcome.final_residual_norm = parse_double(r[cr], "residual_norm");
    p.outcome.params = ParamSet::zero(s);
    for (int i = 0; i < 2 * k; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      p.outcome.params.flat()[i] = parse_double(r[pcol[idx]], names[idx]);
    }
    fields.back().points.push_back(std::move(p));
  }
  return fields;
}

void write_truth_csv(std::ostream& out, const GroundTruth& truth) {
  CsvWriter w(out);
  w.row({"frame", "t_seconds", "u_true", "v_true", "exx_true", "eyy_true", "cx", "cy"});
  for (const TruthRecord& r : truth.records) {
    w.row({std::to_string(r.frame), format_double(r.t_seconds), format_double(r.u), format_double(r.v),
           format_double(r.exx), format_double(r.eyy), format_double(truth.center_x), format_double(truth.center_y)});
  }
}

GroundTruth read_truth_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv_file(path);
  const std::size_t cf = t.column("frame");
  const std::size_t ct = t.column("t_seconds");
  const std::size_t cu = t.column("u_true");
  const std::size_t cv = t.column("v_true");
  const bool strain = t.has_column("exx_true");
  GroundTruth g;
  for (const auto& r : t.rows) {
    TruthRecord rec;
    rec.frame = parse_int(r[cf], "frame");
    if (rec.frame != static_cast<int>(g.records.size())) {
      throw Error(ErrorCode::Parse, "truth CSV frames must run 0, 1, 2, ...");
    }
    rec.t_seconds = parse_double(r[ct], "t_seconds");
    rec.u = parse_double(r[cu], "u_true");
    rec.v = parse_double(r[cv], "v_true");
    if (strain) {
      rec.exx = parse_double(r[t.column("exx_true")], "exx_true");
      rec.eyy = parse_double(r[t.column("eyy_true")], "eyy_true");
      g.center_x = parse_double(r[t.column("cx")], "cx");
      g.center_y = parse_double(r[t.column("cy")], "cy");
    }
    g.records.push_back(rec);
  }
  return g;
}

void write_key_values(std::ostream& out, const std::map<std::string, std::string>& values) {
  for (const auto& [k, v] : values) out << k << '=' << v << '\n';
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Parse, "metadata line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace stdic
