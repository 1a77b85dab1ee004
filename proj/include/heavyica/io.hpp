#pragma once

#include "heavyica/sources.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <string>

namespace heavyica {

using Json = nlohmann::ordered_json;

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

/// CSV with header "x1,...,xn" and one observation per line.
std::string to_csv(const SampleMatrix& samples);
SampleMatrix parse_csv(const std::string& text);

void write_csv(const std::filesystem::path& path, const SampleMatrix& samples, bool force);
SampleMatrix read_csv(const std::filesystem::path& path);

/// Writes `text`, refusing to replace an existing file unless `force`.
void write_file(const std::filesystem::path& path, const std::string& text, bool force);
std::string read_file(const std::filesystem::path& path);

/// Row-major nested arrays.
Json matrix_to_json(const Eigen::MatrixXd& M);
Eigen::MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::VectorXd& v);
/// Columns as a list of arrays.
Json columns_to_json(const Eigen::MatrixXd& M);

}  // namespace heavyica
