#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcm/matrixcore.hpp"
#include "rcm/model.hpp"

namespace rcm::cli {

using Json = nlohmann::ordered_json;

// {"dim": [rows, cols], "rows": [[...], ...]}
Json matrix_to_json(const Matrix& m);
// SchemaError when the layout or "dim" is inconsistent.
Matrix matrix_from_json(const Json& j, const std::string& what);

// IoError if unreadable, ParseError if not JSON.
Json read_json_file(const std::filesystem::path& path);

// "identity", "cs:VAR,COV" or the path of a JSON matrix file. p is required
// (> 0) for the first two and checked against the file otherwise (0 = any).
SpdMatrix parse_psi_spec(const std::string& spec, int p);

struct ScatterInput {
  std::vector<std::string> features;
  std::vector<StudyData> studies;
};

// {"format_version", "features", "studies": [{"name", "n", "scatter"}]}
Json scatter_to_json(const std::vector<std::string>& features,
                     const std::vector<std::string>& names, const std::vector<StudyData>& data);
ScatterInput scatter_from_json(const Json& j);

}  // namespace rcm::cli
