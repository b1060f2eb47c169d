#include "pnpmpc/io/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pnpmpc::io {

namespace {

std::string shape(int r, int c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

const Json& member(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path + "/" + key, "missing");
  return *it;
}

bool has(const Json& j, const std::string& key) { return j.is_object() && j.contains(key) && !j.at(key).is_null(); }

double read_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path, "not finite");
  return v;
}

int read_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
  return j.get<int>();
}

std::string read_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

Eigen::MatrixXd read_matrix(const Json& j, const std::string& path, int rows, int cols) {
  Eigen::MatrixXd m;
  if (j.is_object()) {
    const int r = read_int(member(j, "rows", path), path + "/rows");
    const int c = read_int(member(j, "cols", path), path + "/cols");
    if (r < 0 || c < 0) throw SchemaError(path, "negative shape");
    const auto& data = member(j, "data", path);
    if (!data.is_array() || static_cast<int>(data.size()) != r * c)
      throw SchemaError(path + "/data", "expected " + std::to_string(r * c) + " numbers");
    m.resize(r, c);
    for (int i = 0; i < r; ++i)
      for (int k = 0; k < c; ++k)
        m(i, k) = read_number(data[i * c + k], path + "/data/" + std::to_string(i * c + k));
  } else if (j.is_array()) {
    const int r = static_cast<int>(j.size());
    int c = -1;
    for (int i = 0; i < r; ++i) {
      const std::string rp = path + "/" + std::to_string(i);
      if (!j[i].is_array()) throw SchemaError(rp, "expected a row array");
      if (c < 0) c = static_cast<int>(j[i].size());
      if (static_cast<int>(j[i].size()) != c) throw SchemaError(rp, "ragged row");
    }
    m.resize(r, std::max(c, 0));
    for (int i = 0; i < r; ++i)
      for (int k = 0; k < c; ++k) m(i, k) = read_number(j[i][k], path + "/" + std::to_string(i) + "/" + std::to_string(k));
  } else {
    throw SchemaError(path, "expected a matrix");
  }
  if ((rows >= 0 && m.rows() != rows) || (cols >= 0 && m.cols() != cols))
    throw SchemaError(path, "expected " + shape(rows < 0 ? static_cast<int>(m.rows()) : rows,
                                                cols < 0 ? static_cast<int>(m.cols()) : cols) +
                                " matrix, got " + shape(static_cast<int>(m.rows()), static_cast<int>(m.cols())));
  return m;
}

Eigen::VectorXd read_vector(const Json& j, const std::string& path, int size) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = read_number(j[i], path + "/" + std::to_string(i));
  if (size >= 0 && v.size() != size)
    throw SchemaError(path, "expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
  return v;
}

geom::HPolytope read_hpolytope(const Json& j, const std::string& path, int dim) {
  const Eigen::MatrixXd c = read_matrix(member(j, "C", path), path + "/C", -1, dim);
  const Eigen::VectorXd d = read_vector(member(j, "d", path), path + "/d", static_cast<int>(c.rows()));
  if (c.rows() == 0) throw SchemaError(path + "/C", "needs at least one row");
  return {c, d};
}

geom::VPolytope read_vpolytope(const Json& j, const std::string& path, int dim) {
  if (!j.is_array() || j.empty()) throw SchemaError(path, "expected a nonempty array of points");
  geom::VPolytope p;
  for (size_t i = 0; i < j.size(); ++i) {
    const std::string ip = path + "/" + std::to_string(i);
    p.vertices.push_back(read_vector(j[i], ip, dim < 0 ? (i ? p.dim() : -1) : dim));
  }
  return p;
}

Json write_matrix(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", Json::array()}};
  Json out = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    out.push_back(row);
  }
  return out;
}

Json write_vector(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json write_hpolytope(const geom::HPolytope& p) { return {{"C", write_matrix(p.C)}, {"d", write_vector(p.d)}}; }

Json write_vpolytope(const geom::VPolytope& p) {
  Json out = Json::array();
  for (const auto& v : p.vertices) out.push_back(write_vector(v));
  return out;
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json read_json_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError("", file + ": " + e.what());
  }
}

void write_json_file(const std::string& file, const Json& j) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + file);
}

}  // namespace pnpmpc::io
