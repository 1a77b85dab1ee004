#pragma once

#include "heavyica/body_geometry.hpp"
#include "heavyica/damping.hpp"
#include "heavyica/fourier_pca.hpp"
#include "heavyica/sources.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace heavyica {

struct MatchResult {
  std::vector<std::size_t> permutation;  // true column i <-> recovered column permutation[i]
  std::vector<int> signs;                // alpha_i
  Eigen::VectorXd errors;                // |A_i - alpha_i b_perm(i)|
  double amari_index = 0.0;
};

/// Optimal sign/permutation matching on cost 1 - |cos|, then per-column
/// errors and the Amari index of recovered^{-1} A. Columns of true_A must be
/// unit norm.
MatchResult match_and_score(const Eigen::MatrixXd& true_A, const Eigen::MatrixXd& recovered);

/// Amari index of P: zero iff P is a scaled permutation matrix, at most 1.
double amari_index(const Eigen::MatrixXd& P);

struct NearestUnitary {
  Eigen::MatrixXd U;
  double distance = 0.0;  // |E - U|_2 = max |sigma_i - 1|
};

NearestUnitary nearest_unitary(const Eigen::MatrixXd& E_hat);

/// (empirical covariance)^{-1/2}, for comparison runs.
Orthogonalizer baseline_whitening(const SampleMatrix& samples);

struct PipelineConfig {
  bool symmetrize = true;
  /// Set when A is known to be unitary: B = I and the data go straight to
  /// damping.
  bool skip_orthogonalization = false;
  OrthogonalizeConfig orthogonalize;
  DampingParams damping;
  RecoveryParams recovery;
  std::uint64_t seed = 0;
};

struct PipelineDiagnostics {
  std::size_t raw_samples = 0;
  std::size_t symmetrized_samples = 0;
  OracleStats oracle;
  WalkDiagnostics walk;
  Eigen::MatrixXd Sigma_hat;
  std::vector<RTrial> R_trials;
  double R = 0.0;
  double acceptance_rate = 0.0;
  std::size_t damped_samples = 0;
  MomentBoundReport moment_bound;
  double eigen_gap = 0.0;
  std::vector<double> probe_gaps;
  double psi_max_imag = 0.0;
  Eigen::VectorXd probe;
};

struct RecoveryResult {
  Eigen::MatrixXd B;
  Eigen::MatrixXd recovered_columns;  // unit columns in the original coordinates
  std::optional<MatchResult> match;   // present when ground truth was given
  PipelineDiagnostics diagnostics;
};

/// symmetrize -> orthogonalize -> select R and damp -> Fourier PCA ->
/// b_i = B^{-1} e_i / |B^{-1} e_i| -> match against true_A if given.
/// Errors leave with the failing stage recorded in Error::stage().
RecoveryResult run_pipeline(const SampleMatrix& samples, const PipelineConfig& config,
                            const std::optional<Eigen::MatrixXd>& true_A = std::nullopt);

/// Relative off-diagonal mass |offdiag(G)|_2 / |G|_2 of G = (BA)^T (BA).
double offdiagonal_ratio(const Eigen::MatrixXd& B, const Eigen::MatrixXd& A);

}  // namespace heavyica
