#pragma once

#include "heavyica/error.hpp"
#include "heavyica/io.hpp"
#include "heavyica/pipeline.hpp"
#include "heavyica/robust_moments.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace heavyica {

/// How the mixing matrix of a synthetic model is built.
struct MixingSpec {
  enum class Kind { identity, unitary_random, random_cond, explicit_matrix } kind = Kind::identity;
  double max_cond = 5.0;  // random_cond: unit columns, cond(A) <= max_cond
  Eigen::MatrixXd matrix;
};

/// Parsed and validated experiment configuration.
///
/// Data come either from `input` (a CSV, with optional ground truth from a
/// sidecar JSON in `truth`) or are synthesized from the model. Seeds below
/// the root are derived as "cli:mixing", "cli:sources" and
/// "cli:pipeline" children.
struct ExperimentConfig {
  std::size_t n = 2;
  std::vector<SourceSpec> sources;
  MixingSpec mixing;
  std::size_t N_samples = 100000;
  double gamma = 0.5;
  double M = 2.0;
  std::optional<double> s_m, s_M;  // default: tight bounds from A
  double eps = 0.05;
  double delta = 0.1;
  std::optional<bool> skip_orthogonalization;  // default: A unitary
  PipelineConfig pipeline;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> truth;
  // evaluate
  std::optional<Eigen::MatrixXd> evaluate_true_A;
  std::optional<Eigen::MatrixXd> evaluate_recovered;  // columns
  std::optional<std::filesystem::path> evaluate_report;
  // compare-baseline
  std::size_t compare_seeds = 10;

  void validate() const;
};

/// Throws Error(configuration) on schema or range violations.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// The synthetic model implied by the configuration.
IcaModel build_model(const ExperimentConfig& config);

struct RunContext {
  std::filesystem::path out_dir = ".";
  bool force = false;
};

/// Each command returns its JSON report (also written to out_dir) and throws
/// heavyica::Error on failure. `error_report` renders such a failure.
Json cmd_generate(const ExperimentConfig& config, const RunContext& ctx);
Json cmd_orthogonalize(const ExperimentConfig& config, const RunContext& ctx);
Json cmd_damp(const ExperimentConfig& config, const RunContext& ctx);
Json cmd_recover(const ExperimentConfig& config, const RunContext& ctx);
Json cmd_pipeline(const ExperimentConfig& config, const RunContext& ctx);
Json cmd_evaluate(const ExperimentConfig& config, const RunContext& ctx);
Json cmd_compare_baseline(const ExperimentConfig& config, const RunContext& ctx);

Json error_report(const std::string& command, const Error& error);

/// Warning text when N is below required_samples for the configured
/// moment bound, or nullopt.
std::optional<std::string> sample_budget_warning(const ExperimentConfig& config, const IcaModel& model);

}  // namespace heavyica
