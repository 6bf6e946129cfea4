#include "surrocep/data.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "surrocep/errors.hpp"

namespace surrocep {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

std::optional<double> parse_optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_double(s);
}

std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw DataFormatError("cannot format number");
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  if (first < last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw DataFormatError("not a number: '" + s + "'");
  return v;
}

int Dataset::covariate_index(const std::string& name) const {
  for (std::size_t i = 0; i < covariate_names.size(); ++i) {
    if (covariate_names[i] == name || covariate_names[i] == "x_" + name) return static_cast<int>(i);
  }
  return -1;
}

void Dataset::validate_masked() const {
  for (const auto& r : records) {
    if (r.z != 0 && r.z != 1) throw DataFormatError("record " + r.id + ": arm must be 0 or 1");
    if (r.x.size() != static_cast<Eigen::Index>(covariate_names.size())) {
      throw DataFormatError("record " + r.id + ": covariate count mismatch");
    }
    const bool ok = r.z == 0 ? (r.t0 && !r.s1 && !r.t1) : (r.s1 && r.t1 && !r.t0);
    if (!ok) throw DataFormatError("record " + r.id + ": missingness inconsistent with arm " + std::to_string(r.z));
  }
}

void Dataset::validate_complete() const {
  for (const auto& r : records) {
    if (r.z != 0 && r.z != 1) throw DataFormatError("record " + r.id + ": arm must be 0 or 1");
    if (!(r.s1 && r.t0 && r.t1)) throw DataFormatError("record " + r.id + ": complete data requires s1, t0 and t1");
  }
}

Dataset CounterfactualTable::masked() const {
  Dataset d;
  d.covariate_names = covariate_names;
  d.records.reserve(static_cast<std::size_t>(size()));
  for (Eigen::Index i = 0; i < size(); ++i) {
    TrialRecord r;
    r.id = std::to_string(i + 1);
    r.z = z(i);
    r.x = x.row(i).transpose();
    if (r.z == 0) {
      r.t0 = t0(i);
    } else {
      r.s1 = s1(i);
      r.t1 = t1(i);
    }
    d.records.push_back(std::move(r));
  }
  return d;
}

Dataset CounterfactualTable::complete() const {
  Dataset d;
  d.covariate_names = covariate_names;
  d.records.reserve(static_cast<std::size_t>(size()));
  for (Eigen::Index i = 0; i < size(); ++i) {
    TrialRecord r;
    r.id = std::to_string(i + 1);
    r.z = z(i);
    r.x = x.row(i).transpose();
    r.s1 = s1(i);
    r.t0 = t0(i);
    r.t1 = t1(i);
    d.records.push_back(std::move(r));
  }
  return d;
}

Dataset read_dataset(std::istream& in, Validation validation) {
  std::string line;
  if (!std::getline(in, line)) throw DataFormatError("empty data file");
  const auto header = split_fields(line);
  if (header.size() < 5 || header[0] != "id" || header[1] != "z" || header[header.size() - 3] != "s1" ||
      header[header.size() - 2] != "t0" || header[header.size() - 1] != "t1") {
    throw DataFormatError("header must be id,z,x_*,s1,t0,t1");
  }
  Dataset d;
  for (std::size_t i = 2; i + 3 < header.size(); ++i) {
    if (header[i].rfind("x_", 0) != 0) throw DataFormatError("covariate column '" + header[i] + "' must start with x_");
    d.covariate_names.push_back(header[i]);
  }
  const std::size_t p = d.covariate_names.size();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_fields(line);
    if (f.size() != header.size()) {
      throw DataFormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " fields");
    }
    TrialRecord r;
    r.id = f[0];
    const double z = parse_double(f[1]);
    if (z != 0.0 && z != 1.0) throw DataFormatError("line " + std::to_string(line_no) + ": z must be 0 or 1");
    r.z = static_cast<int>(z);
    r.x.resize(static_cast<Eigen::Index>(p));
    for (std::size_t j = 0; j < p; ++j) r.x(static_cast<Eigen::Index>(j)) = parse_double(f[2 + j]);
    r.s1 = parse_optional(f[2 + p]);
    r.t0 = parse_optional(f[3 + p]);
    r.t1 = parse_optional(f[4 + p]);
    d.records.push_back(std::move(r));
  }
  if (d.records.empty()) throw DataFormatError("data file has no records");
  if (validation == Validation::Masked) d.validate_masked();
  if (validation == Validation::Complete) d.validate_complete();
  return d;
}

Dataset read_dataset_file(const std::string& path, Validation validation) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open " + path);
  return read_dataset(in, validation);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  out << "id,z";
  for (const auto& n : data.covariate_names) out << ',' << n;
  out << ",s1,t0,t1\n";
  for (const auto& r : data.records) {
    out << r.id << ',' << r.z;
    for (Eigen::Index j = 0; j < r.x.size(); ++j) out << ',' << format_double(r.x(j));
    out << ',' << format_optional(r.s1) << ',' << format_optional(r.t0) << ',' << format_optional(r.t1) << '\n';
  }
}

Dataset endpoint_transform(const Dataset& data, EndpointMode mode, int baseline_column) {
  if (mode == EndpointMode::Original) return data;
  if (baseline_column < 0 || baseline_column >= static_cast<int>(data.covariate_names.size())) {
    throw MissingBaseline("no baseline covariate column for difference-from-baseline endpoints");
  }
  Dataset out = data;
  for (auto& r : out.records) {
    const double b = r.x(baseline_column);
    if (r.t0) *r.t0 -= b;
    if (r.t1) *r.t1 -= b;
  }
  return out;
}

CounterfactualTable endpoint_transform(const CounterfactualTable& table, EndpointMode mode, int baseline_column) {
  if (mode == EndpointMode::Original) return table;
  if (baseline_column < 0 || baseline_column >= table.x.cols()) {
    throw MissingBaseline("no baseline covariate column for difference-from-baseline endpoints");
  }
  CounterfactualTable out = table;
  out.t0 -= table.x.col(baseline_column);
  out.t1 -= table.x.col(baseline_column);
  return out;
}

}  // namespace surrocep
