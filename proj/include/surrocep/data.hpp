#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace surrocep {

enum class EndpointMode { Original, DiffFromBaseline };

/// One trial subject. S(0) is identically zero and is not stored. A record
/// observes exactly one arm: z = 0 carries t0, z = 1 carries s1 and t1.
struct TrialRecord {
  std::string id;
  int z = 0;
  Eigen::VectorXd x;
  std::optional<double> s1;
  std::optional<double> t0;
  std::optional<double> t1;

  bool operator==(const TrialRecord& o) const {
    return id == o.id && z == o.z && x.size() == o.x.size() && (x.array() == o.x.array()).all() && s1 == o.s1 &&
           t0 == o.t0 && t1 == o.t1;
  }
};

struct Dataset {
  /// Covariate column names as they appear in the file header (x_*).
  std::vector<std::string> covariate_names;
  std::vector<TrialRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  int covariate_index(const std::string& name) const;

  /// Throws DataFormatError unless every record has arm-consistent missingness.
  void validate_masked() const;
  /// Throws DataFormatError unless every record carries all three potential outcomes.
  void validate_complete() const;
};

/// All potential outcomes for every subject; only the simulator and the
/// full-data oracle see this.
struct CounterfactualTable {
  std::vector<std::string> covariate_names;
  Eigen::MatrixXd x;  // n x p
  Eigen::VectorXd s1;
  Eigen::VectorXd t0;
  Eigen::VectorXd t1;
  Eigen::VectorXi z;

  Eigen::Index size() const { return s1.size(); }
  Dataset masked() const;
  Dataset complete() const;
};

enum class Validation { Masked, Complete, None };

Dataset read_dataset(std::istream& in, Validation validation = Validation::Masked);
Dataset read_dataset_file(const std::string& path, Validation validation = Validation::Masked);
void write_dataset(std::ostream& out, const Dataset& data);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

/// Replaces T(z) by T(z) - x[baseline_column] (or adds it back).
Dataset endpoint_transform(const Dataset& data, EndpointMode mode, int baseline_column);
CounterfactualTable endpoint_transform(const CounterfactualTable& table, EndpointMode mode, int baseline_column);

}  // namespace surrocep
