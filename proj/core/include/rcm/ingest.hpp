#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rcm/matrixcore.hpp"
#include "rcm/model.hpp"

namespace rcm {

// A delimited numeric table: one header row of column names, one sample per row.
struct Table {
  std::vector<std::string> columns;
  Matrix values;
};

// Reads CSV or TSV (tab if the extension is .tsv/.tab or the header contains
// a tab). Numbers are parsed locale-independently. Throws IoError,
// ParseError, MissingValueError ("NA", "NaN", empty cells) or SchemaError
// (duplicate column names).
Table read_table(const std::filesystem::path& path);
Table parse_table(std::istream& in, char delimiter, const std::string& source = "<stream>");

// Writes with 17 significant digits so values round-trip exactly.
void write_table(std::ostream& out, const std::vector<std::string>& columns, const Matrix& values,
                 char delimiter = ',');

struct Study {
  std::string name;
  Matrix x;  // n_i x p
};

// Studies sharing one feature order.
struct StudySet {
  std::vector<Study> studies;
  std::vector<std::string> features;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(features.size()); }
};

// Loads every file, keeps the features present in all of them (in the order
// of the first file) and reorders each study's columns to match.
// SchemaError when no feature is shared.
StudySet load_studies(const std::vector<std::filesystem::path>& paths);

// Pooled within-study variance of every feature:
//   sum_i sum_j (x_ij - mean_i)^2 / (n_total - k)
Vector pooled_variance(const StudySet& s);

// Keeps the `top` features with the largest pooled variance (ties to the
// earlier column), preserving the original column order.
StudySet select_top_variance(const StudySet& s, int top);

// S_i = X_i^T X_i after optional per-study column centering; n_i is kept as
// the row count either way.
std::vector<StudyData> to_study_data(const StudySet& s, bool center = true);

// R_ij = sigma_ij / sqrt(sigma_ii sigma_jj). Takes a plain matrix because
// perfectly correlated (singular) inputs are legitimate.
Matrix to_correlation(const Matrix& sigma);

struct Merge {
  int left = 0;   // cluster ids: 0..p-1 are features, p + m is the m-th merge
  int right = 0;
  double height = 0.0;
  int size = 0;
};

struct ModuleAssignment {
  std::vector<int> labels;  // module id per feature, 1-based, numbered by first feature
  std::vector<Merge> merges;  // full tree, p - 1 merges
  std::vector<double> connectivity;  // sum of |R| to other features in the same module
};

// Ward (D2) agglomerative clustering on d_ij = 1 - |R_ij|, cut to n_modules.
ModuleAssignment cluster_modules(const Matrix& r, int n_modules);

void write_modules_csv(std::ostream& out, const std::vector<std::string>& features,
                       const ModuleAssignment& modules);

}  // namespace rcm
