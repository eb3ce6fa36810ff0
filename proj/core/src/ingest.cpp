#include "rcm/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "rcm/errors.hpp"

namespace rcm {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> out;
  std::string_view rest(line);
  while (true) {
    const auto pos = rest.find(delimiter);
    out.push_back(trim(rest.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  return out;
}

bool is_missing(const std::string& cell) {
  static const std::set<std::string> kMissing{"", "NA", "na", "NaN", "nan", "N/A", "null", "NULL"};
  return kMissing.contains(cell);
}

double parse_number(const std::string& cell, const std::string& where) {
  if (is_missing(cell)) throw MissingValueError("missing value at " + where);
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("malformed number '" + cell + "' at " + where);
  }
  if (!std::isfinite(value)) throw MissingValueError("non-finite value at " + where);
  return value;
}

char sniff_delimiter(const std::filesystem::path& path, const std::string& header) {
  const auto ext = path.extension().string();
  if (ext == ".tsv" || ext == ".tab") return '\t';
  if (header.find('\t') != std::string::npos && header.find(',') == std::string::npos) return '\t';
  return ',';
}

}  // namespace

Table parse_table(std::istream& in, char delimiter, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  Table t;
  t.columns = split(line, delimiter);
  {
    std::set<std::string> seen;
    for (const auto& c : t.columns) {
      if (!seen.insert(c).second) throw SchemaError(source + ": duplicate column '" + c + "'");
    }
  }
  const auto p = t.columns.size();

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, delimiter);
    if (cells.size() != p) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(p) +
                       " fields, found " + std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < p; ++c) {
      values.push_back(parse_number(
          cells[c], source + ":" + std::to_string(line_no) + " column '" + t.columns[c] + "'"));
    }
    ++rows;
  }
  t.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(p));
  return t;
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string header;
  std::getline(in, header);
  const char delimiter = sniff_delimiter(path, header);
  in.clear();
  in.seekg(0);
  return parse_table(in, delimiter, path.string());
}

void write_table(std::ostream& out, const std::vector<std::string>& columns, const Matrix& values,
                 char delimiter) {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out << delimiter;
    out << columns[c];
  }
  out << '\n';
  char buf[32];
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c) out << delimiter;
      const auto res = std::to_chars(buf, buf + sizeof buf, values(r, c));
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

StudySet load_studies(const std::vector<std::filesystem::path>& paths) {
  if (paths.empty()) throw DomainError("load_studies: no input files");
  std::vector<Table> tables;
  tables.reserve(paths.size());
  for (const auto& path : paths) tables.push_back(read_table(path));

  StudySet out;
  for (const auto& name : tables.front().columns) {
    const bool everywhere = std::all_of(tables.begin() + 1, tables.end(), [&](const Table& t) {
      return std::find(t.columns.begin(), t.columns.end(), name) != t.columns.end();
    });
    if (everywhere) out.features.push_back(name);
  }
  if (out.features.empty()) throw SchemaError("load_studies: the inputs share no feature");

  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto& t = tables[i];
    if (t.values.rows() < 1) throw SchemaError(paths[i].string() + ": no samples");
    std::unordered_map<std::string, Eigen::Index> where;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      where[t.columns[c]] = static_cast<Eigen::Index>(c);
    }
    Matrix x(t.values.rows(), out.dim());
    for (Eigen::Index c = 0; c < out.dim(); ++c) {
      x.col(c) = t.values.col(where.at(out.features[static_cast<std::size_t>(c)]));
    }
    out.studies.push_back({paths[i].stem().string(), std::move(x)});
  }
  return out;
}

Vector pooled_variance(const StudySet& s) {
  if (s.studies.empty()) throw DomainError("pooled_variance: empty study set");
  Vector acc = Vector::Zero(s.dim());
  long total = 0;
  for (const auto& study : s.studies) {
    acc += center_columns(study.x).colwise().squaredNorm().transpose();
    total += study.x.rows();
  }
  const long dof = std::max(1L, total - static_cast<long>(s.studies.size()));
  return acc / static_cast<double>(dof);
}

StudySet select_top_variance(const StudySet& s, int top) {
  if (top < 1 || top > s.dim()) {
    throw DomainError("select_top_variance: top = " + std::to_string(top) +
                      " must lie in [1, " + std::to_string(s.dim()) + "]");
  }
  const Vector var = pooled_variance(s);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(s.dim()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return var(a) > var(b); });
  order.resize(static_cast<std::size_t>(top));
  std::sort(order.begin(), order.end());

  StudySet out;
  for (auto c : order) out.features.push_back(s.features[static_cast<std::size_t>(c)]);
  for (const auto& study : s.studies) {
    Matrix x(study.x.rows(), top);
    for (int c = 0; c < top; ++c) x.col(c) = study.x.col(order[static_cast<std::size_t>(c)]);
    out.studies.push_back({study.name, std::move(x)});
  }
  return out;
}

std::vector<StudyData> to_study_data(const StudySet& s, bool center) {
  std::vector<StudyData> out;
  out.reserve(s.studies.size());
  for (const auto& study : s.studies) {
    out.push_back(study_from_observations(center ? center_columns(study.x) : study.x));
  }
  return out;
}

Matrix to_correlation(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols()) throw DimensionMismatch("to_correlation: not square");
  const Vector d = sigma.diagonal();
  if (!(d.array() > 0.0).all()) throw DomainError("to_correlation: nonpositive diagonal entry");
  const Vector inv_sd = d.array().sqrt().inverse();
  Matrix r = inv_sd.asDiagonal() * symmetrize(sigma) * inv_sd.asDiagonal();
  r = r.cwiseMax(-1.0).cwiseMin(1.0);
  r.diagonal().setOnes();
  return r;
}

ModuleAssignment cluster_modules(const Matrix& r, int n_modules) {
  if (r.rows() != r.cols()) throw DimensionMismatch("cluster_modules: not square");
  const auto p = static_cast<int>(r.rows());
  if (n_modules < 1 || n_modules > p) {
    throw DomainError("cluster_modules: n_modules = " + std::to_string(n_modules) +
                      " must lie in [1, " + std::to_string(p) + "]");
  }

  // Squared distances between active clusters (Ward.D2 works on d^2).
  Matrix d2 = (1.0 - r.cwiseAbs().array()).square().matrix();
  std::vector<int> id(static_cast<std::size_t>(p));
  std::vector<int> size(static_cast<std::size_t>(p), 1);
  std::vector<bool> active(static_cast<std::size_t>(p), true);
  std::iota(id.begin(), id.end(), 0);

  ModuleAssignment out;
  out.merges.reserve(static_cast<std::size_t>(std::max(0, p - 1)));
  for (int m = 0; m + 1 < p; ++m) {
    int bi = -1;
    int bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < p; ++i) {
      if (!active[i]) continue;
      for (int j = i + 1; j < p; ++j) {
        if (active[j] && d2(i, j) < best) {
          best = d2(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    const double ni = size[bi];
    const double nj = size[bj];
    // Lance-Williams update for Ward linkage; the merged cluster takes slot bi.
    for (int k = 0; k < p; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double nk = size[k];
      const double updated =
          ((ni + nk) * d2(bi, k) + (nj + nk) * d2(bj, k) - nk * d2(bi, bj)) / (ni + nj + nk);
      d2(bi, k) = d2(k, bi) = updated;
    }
    out.merges.push_back({std::min(id[bi], id[bj]), std::max(id[bi], id[bj]),
                          std::sqrt(std::max(0.0, best)), static_cast<int>(ni + nj)});
    active[bj] = false;
    size[bi] = static_cast<int>(ni + nj);
    id[bi] = p + m;
  }

  // Cut: replay the first p - n_modules merges with a union-find.
  std::vector<int> parent(static_cast<std::size_t>(2 * p));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int m = 0; m < p - n_modules; ++m) {
    const auto& mg = out.merges[m];
    parent[find(mg.left)] = p + m;
    parent[find(mg.right)] = p + m;
  }
  std::unordered_map<int, int> module_of_root;
  out.labels.resize(static_cast<std::size_t>(p));
  for (int f = 0; f < p; ++f) {
    const int root = find(f);
    auto [it, inserted] = module_of_root.try_emplace(root, static_cast<int>(module_of_root.size()) + 1);
    out.labels[f] = it->second;
  }

  out.connectivity.assign(static_cast<std::size_t>(p), 0.0);
  for (int f = 0; f < p; ++f) {
    for (int g = 0; g < p; ++g) {
      if (g != f && out.labels[g] == out.labels[f]) out.connectivity[f] += std::abs(r(f, g));
    }
  }
  return out;
}

void write_modules_csv(std::ostream& out, const std::vector<std::string>& features,
                       const ModuleAssignment& modules) {
  if (features.size() != modules.labels.size()) {
    throw DimensionMismatch("write_modules_csv: feature count differs from label count");
  }
  out << "feature,module,connectivity\n";
  char buf[32];
  for (std::size_t f = 0; f < features.size(); ++f) {
    const auto res = std::to_chars(buf, buf + sizeof buf, modules.connectivity[f]);
    out << features[f] << ',' << modules.labels[f] << ',' << std::string_view(buf, res.ptr - buf)
        << '\n';
  }
}

}  // namespace rcm
