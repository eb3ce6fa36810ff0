#include "json_io.hpp"

#include <charconv>
#include <fstream>

#include "rcm/cli/cli.hpp"
#include "rcm/errors.hpp"
#include "rcm/sampling.hpp"

namespace rcm::cli {

namespace {

double parse_double(std::string_view text, const std::string& what) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(what + ": malformed number '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string> default_features(Eigen::Index p) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < p; ++i) out.push_back("x" + std::to_string(i + 1));
  return out;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return Json{{"dim", {m.rows(), m.cols()}}, {"rows", std::move(rows)}};
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("rows")) {
    throw SchemaError(what + ": expected an object with \"dim\" and \"rows\"");
  }
  const auto& dim = j.at("dim");
  const auto& rows = j.at("rows");
  if (!dim.is_array() || dim.size() != 2 || !dim[0].is_number_integer() ||
      !dim[1].is_number_integer() || !rows.is_array()) {
    throw SchemaError(what + ": malformed \"dim\" or \"rows\"");
  }
  const auto r = dim[0].get<Eigen::Index>();
  const auto c = dim[1].get<Eigen::Index>();
  if (r < 0 || c < 0 || static_cast<Eigen::Index>(rows.size()) != r) {
    throw SchemaError(what + ": row count differs from \"dim\"");
  }
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) {
      throw SchemaError(what + ": row " + std::to_string(i) + " has the wrong length");
    }
    for (Eigen::Index k = 0; k < c; ++k) {
      const auto& v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) throw SchemaError(what + ": non-numeric entry");
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

SpdMatrix parse_psi_spec(const std::string& spec, int p) {
  if (spec == "identity" || spec.starts_with("cs:")) {
    if (p < 1) throw DomainError("--p is required with psi spec '" + spec + "'");
    if (spec == "identity") return SpdMatrix::identity(p);
    const std::string_view args = std::string_view(spec).substr(3);
    const auto comma = args.find(',');
    if (comma == std::string_view::npos) {
      throw ParseError("psi spec '" + spec + "': expected cs:VARIANCE,COVARIANCE");
    }
    const double var = parse_double(args.substr(0, comma), "psi spec");
    const double cov = parse_double(args.substr(comma + 1), "psi spec");
    return compound_symmetry(p, var, cov);
  }
  const Json j = read_json_file(spec);
  SpdMatrix psi(matrix_from_json(j.contains("psi") ? j.at("psi") : j, spec));
  if (p > 0 && psi.dim() != p) {
    throw DimensionMismatch("psi file '" + spec + "' is " + std::to_string(psi.dim()) +
                            "-dimensional, --p is " + std::to_string(p));
  }
  return psi;
}

Json scatter_to_json(const std::vector<std::string>& features,
                     const std::vector<std::string>& names, const std::vector<StudyData>& data) {
  Json studies = Json::array();
  for (std::size_t i = 0; i < data.size(); ++i) {
    studies.push_back({{"name", i < names.size() ? names[i] : "study_" + std::to_string(i + 1)},
                       {"n", data[i].n},
                       {"scatter", matrix_to_json(data[i].scatter)}});
  }
  return Json{{"format_version", kFormatVersion},
              {"kind", "scatter"},
              {"features", features},
              {"studies", std::move(studies)}};
}

ScatterInput scatter_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("studies") || !j.at("studies").is_array()) {
    throw SchemaError("scatter input: expected an object with a \"studies\" array");
  }
  ScatterInput out;
  for (const auto& s : j.at("studies")) {
    if (!s.is_object() || !s.contains("n") || !s.at("n").is_number_integer() ||
        !s.contains("scatter")) {
      throw SchemaError("scatter input: every study needs integer \"n\" and \"scatter\"");
    }
    out.studies.push_back({matrix_from_json(s.at("scatter"), "scatter"), s.at("n").get<int>()});
  }
  if (out.studies.empty()) throw SchemaError("scatter input: no studies");
  const auto p = common_dim(out.studies);
  if (j.contains("features")) {
    out.features = j.at("features").get<std::vector<std::string>>();
    if (static_cast<Eigen::Index>(out.features.size()) != p) {
      throw SchemaError("scatter input: feature count differs from the scatter dimension");
    }
  } else {
    out.features = default_features(p);
  }
  return out;
}

}  // namespace rcm::cli
