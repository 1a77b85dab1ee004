#pragma once

#include "heavyica/centroid_oracle.hpp"
#include "heavyica/sources.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace heavyica {

/// Hit-and-run settings. Zero values select the defaults
/// (burn-in 50 n^2 steps, thinning n^2 steps, boundary tolerance shell/4).
struct WalkParams {
  std::size_t burn_in = 0;
  std::size_t thinning = 0;
  std::size_t chains = 1;
  double boundary_tol = 0.0;
  /// A chain is declared stuck when, over `stuck_window` consecutive steps,
  /// the fraction of moves that land on a feasible point with a nonzero
  /// chord falls below `stuck_floor`.
  std::size_t stuck_window = 200;
  double stuck_floor = 0.05;

  void validate() const;
};

struct WalkDiagnostics {
  std::size_t steps = 0;
  std::size_t moves = 0;
  double acceptance_rate() const { return steps == 0 ? 0.0 : static_cast<double>(moves) / steps; }
};

struct BodySamples {
  SampleMatrix points;
  WalkDiagnostics walk;
};

/// Approximately uniform points of the body by hit-and-run from the origin.
/// Chain c uses seed derive_seed(seed, "body:chain", c); chains run in
/// parallel and are concatenated in chain order.
BodySamples sample_body(const ConvexBodyOracle& body, std::size_t K, const WalkParams& walk, std::uint64_t seed);

/// Axis-aligned cube [-a, a]^n answered exactly.
class CubeBody final : public ConvexBodyOracle {
 public:
  CubeBody(Eigen::Index n, double half_width);
  MembershipDecision query(const Eigen::VectorXd& y) const override;
  Eigen::Index dim() const override { return n_; }
  double inner_radius() const override { return a_; }
  double outer_radius() const override { return a_ * std::sqrt(static_cast<double>(n_)); }
  double shell() const override { return 1e-3 * a_; }

 private:
  Eigen::Index n_;
  double a_;
};

/// Cross-polytope {|x|_1 <= r} answered exactly.
class CrossPolytopeBody final : public ConvexBodyOracle {
 public:
  CrossPolytopeBody(Eigen::Index n, double radius);
  MembershipDecision query(const Eigen::VectorXd& y) const override;
  Eigen::Index dim() const override { return n_; }
  double inner_radius() const override { return r_ / std::sqrt(static_cast<double>(n_)); }
  double outer_radius() const override { return r_; }
  double shell() const override { return 1e-3 * r_; }

 private:
  Eigen::Index n_;
  double r_;
};

struct CovarianceEstimate {
  Eigen::MatrixXd Sigma_hat;
  double eps_c = 0.0;
  WalkDiagnostics walk;
  std::size_t samples = 0;
};

/// Second-moment matrix of body samples with the mean fixed at zero,
/// symmetrized exactly. Throws on a rank-deficient result.
CovarianceEstimate estimate_covariance(const SampleMatrix& body_samples, double eps_c);

struct Orthogonalizer {
  Eigen::MatrixXd B;
  CovarianceEstimate provenance;
};

/// Symmetric positive-definite inverse square root by eigendecomposition.
/// Throws Error(numerical) when an eigenvalue is below 1e-12 times the
/// largest one.
Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& M);

Orthogonalizer orthogonalizer_from_cov(const CovarianceEstimate& cov);

/// Accuracy target of the covariance estimate: eps / (2 (n+1)^4).
double covariance_accuracy(double eps, std::size_t n);

struct OrthogonalizeConfig {
  OracleParams oracle;
  WalkParams walk;
  std::size_t body_samples = 2000;
  std::uint64_t seed = 0;
};

struct OrthogonalizeResult {
  Orthogonalizer orthogonalizer;
  SampleMatrix transformed;  // rows B x
  OracleStats oracle_stats;
};

/// Build the centroid-body oracle on the samples, walk the body, and return
/// B = Sigma_hat^{-1/2} together with the transformed samples.
OrthogonalizeResult orthogonalize(const SampleMatrix& samples, const OrthogonalizeConfig& config);

/// Rows of x B^T.
SampleMatrix apply_linear(const SampleMatrix& samples, const Eigen::MatrixXd& B);

}  // namespace heavyica
