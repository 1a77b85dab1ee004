#include "heavyica/io.hpp"

#include "heavyica/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace heavyica {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string to_csv(const SampleMatrix& samples) {
  std::string out;
  for (Eigen::Index j = 0; j < samples.dim(); ++j) {
    if (j) out += ',';
    out += 'x' + std::to_string(j + 1);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < samples.dim(); ++j) {
      if (j) out += ',';
      out += format_double(samples.data(i, j));
    }
    out += '\n';
  }
  return out;
}

SampleMatrix parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::io, "CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  Eigen::Index n = 0;
  {
    std::istringstream header(line);
    std::string name;
    while (std::getline(header, name, ',')) {
      if (name != "x" + std::to_string(n + 1)) throw Error(ErrorKind::io, "CSV header must be x1,...,xn");
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorKind::io, "CSV header has no columns");
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    for (Eigen::Index j = 0; j < n; ++j) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw Error(ErrorKind::io, "bad number on CSV line " + std::to_string(line_no));
      values.push_back(v);
      p = res.ptr;
      if (j + 1 < n) {
        if (p == end || *p != ',') throw Error(ErrorKind::io, "too few fields on CSV line " + std::to_string(line_no));
        ++p;
      }
    }
    if (p != end) throw Error(ErrorKind::io, "too many fields on CSV line " + std::to_string(line_no));
  }
  SampleMatrix s;
  const Eigen::Index N = static_cast<Eigen::Index>(values.size()) / n;
  s.data = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), N, n);
  s.validate();
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& text, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw Error(ErrorKind::io, path.string() + " exists; pass --force to overwrite");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_csv(const std::filesystem::path& path, const SampleMatrix& samples, bool force) {
  write_file(path, to_csv(samples), force);
}

SampleMatrix read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

Json matrix_to_json(const Eigen::MatrixXd& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw Error(ErrorKind::configuration, "expected a matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorKind::configuration, "matrix rows differ in length");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      if (!row[static_cast<std::size_t>(k)].is_number()) throw Error(ErrorKind::configuration, "matrix entry is not a number");
      M(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
  }
  return M;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json columns_to_json(const Eigen::MatrixXd& M) { return matrix_to_json(M.transpose()); }

}  // namespace heavyica
