#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <json.hpp>

#include "pnpmpc/geometry/polytope.hpp"

namespace pnpmpc::io {

using Json = nlohmann::json;

/// Malformed input; `path` is a JSON pointer to the offending value.
struct SchemaError : std::runtime_error {
  SchemaError(const std::string& path, const std::string& what)
      : std::runtime_error((path.empty() ? std::string("/") : path) + ": " + what), path(path), detail(what) {}
  std::string path;
  std::string detail;
};

const Json& member(const Json& j, const std::string& key, const std::string& path);
bool has(const Json& j, const std::string& key);

double read_number(const Json& j, const std::string& path);
int read_int(const Json& j, const std::string& path);
std::string read_string(const Json& j, const std::string& path);

/// Nested rows [[..], [..]] or {"rows", "cols", "data"} in row-major order.
/// Negative `rows` / `cols` accept any size.
Eigen::MatrixXd read_matrix(const Json& j, const std::string& path, int rows = -1, int cols = -1);
Eigen::VectorXd read_vector(const Json& j, const std::string& path, int size = -1);
/// {"C", "d"}; `dim` < 0 accepts any dimension.
geom::HPolytope read_hpolytope(const Json& j, const std::string& path, int dim = -1);
/// Array of points.
geom::VPolytope read_vpolytope(const Json& j, const std::string& path, int dim = -1);

Json write_matrix(const Eigen::MatrixXd& m);
Json write_vector(const Eigen::VectorXd& v);
Json write_hpolytope(const geom::HPolytope& p);
Json write_vpolytope(const geom::VPolytope& p);

std::string hex(std::uint64_t v);

Json read_json_file(const std::string& file);
/// Pretty-printed, trailing newline.
void write_json_file(const std::string& file, const Json& j);

}  // namespace pnpmpc::io
