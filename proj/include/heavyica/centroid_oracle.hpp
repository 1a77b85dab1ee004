#pragma once

#include "heavyica/sources.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>

namespace heavyica {

enum class Verdict { feasible, infeasible };
enum class BodyTag { centroid, polar };

std::string_view to_string(BodyTag tag);

struct MembershipDecision {
  Verdict verdict = Verdict::feasible;
  /// Signed distance proxy to the oracle's decision boundary, positive on
  /// the feasible side.
  double margin = 0.0;
  /// Support-function evaluations spent on this query.
  int queries_used = 0;
  /// Iteration budget ran out before either certificate was found; the
  /// verdict is then feasible by default.
  bool budget_exhausted = false;
  /// For infeasible answers: unit normal w and offset c such that every
  /// point p with <p, w> > c is also infeasible. Empty otherwise.
  Eigen::VectorXd witness;
  double witness_offset = 0.0;

  bool feasible() const { return verdict == Verdict::feasible; }
};

/// Anything that answers weak membership queries for a convex body K with
/// r_inner * B2 within K within R_outer * B2.
class ConvexBodyOracle {
 public:
  virtual ~ConvexBodyOracle() = default;
  virtual MembershipDecision query(const Eigen::VectorXd& y) const = 0;
  virtual Eigen::Index dim() const = 0;
  virtual double inner_radius() const = 0;
  virtual double outer_radius() const = 0;
  /// Width of the weak-membership shell.
  virtual double shell() const = 0;
};

struct OracleParams {
  double eps = 0.05;
  double delta = 0.1;
  double r_inner = 0.0;
  double R_outer = 0.0;
  std::size_t n_freeze = 0;  // 0: freeze every available sample
  std::uint64_t seed = 0;
  std::size_t query_budget = 100000;  // Q; each query is budgeted delta / Q
  std::size_t max_iterations = 400;   // per centroid query

  void validate(std::size_t n, BodyTag tag) const;
  double per_query_delta() const { return delta / static_cast<double>(query_budget); }
  /// Accuracy the directional moment estimates must reach:
  /// eps * r / (2 (1 + r)) with r = r_inner.
  double validity_accuracy() const { return eps * r_inner / (2.0 * (1.0 + r_inner)); }
};

/// Radii for the centroid body of a normalized symmetric model:
/// r = s_m / sqrt(n), R = s_M sqrt(n).
OracleParams centroid_oracle_params(std::size_t n, double s_m, double s_M, double eps, double delta);
/// Radii for the polar body: r = 1 / (sqrt(n) s_M), R = sqrt(n) / s_m.
OracleParams polar_oracle_params(std::size_t n, double s_m, double s_M, double eps, double delta);

struct OracleStats {
  std::uint64_t queries = 0;
  std::uint64_t evaluations = 0;
  std::uint64_t budget_exhausted = 0;
};

/// Weak membership oracle over a frozen sample set, for either the
/// centroid body Gamma X or its polar. Immutable after construction apart
/// from diagnostic counters; safe for concurrent queries.
class MembershipOracle final : public ConvexBodyOracle {
 public:
  MembershipOracle(const SampleMatrix& samples, OracleParams params, BodyTag tag);
  MembershipOracle(const MembershipOracle&) = delete;
  MembershipOracle& operator=(const MembershipOracle&) = delete;

  MembershipDecision query(const Eigen::VectorXd& y) const override;
  Eigen::Index dim() const override { return frozen_.cols(); }
  double inner_radius() const override { return params_.r_inner; }
  double outer_radius() const override { return params_.R_outer; }
  double shell() const override { return params_.eps; }

  BodyTag tag() const { return tag_; }
  const OracleParams& params() const { return params_; }
  Eigen::Index frozen_size() const { return frozen_.rows(); }

  /// Empirical support function H(u) of the frozen samples.
  double support(const Eigen::VectorXd& u) const;
  /// Subgradient of f(u) = H(u) - <y, u>:
  /// (1/N) sum sign(<x_i, u>) x_i - y.
  Eigen::VectorXd subgradient(const Eigen::VectorXd& u, const Eigen::VectorXd& y) const;

  OracleStats stats() const;

 private:
  /// Maximizer of <z, u> over the empirical centroid body and its value H(u).
  double support_point(const Eigen::VectorXd& u, Eigen::VectorXd& point) const;
  MembershipDecision centroid_query(const Eigen::VectorXd& y) const;
  MembershipDecision polar_query(const Eigen::VectorXd& y) const;

  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMatrix frozen_;
  OracleParams params_;
  BodyTag tag_;
  mutable std::atomic<std::uint64_t> queries_{0};
  mutable std::atomic<std::uint64_t> evaluations_{0};
  mutable std::atomic<std::uint64_t> exhausted_{0};
};

/// Polar body test: feasible iff |y| <= 1 / h(y/|y|).
MembershipDecision polar_membership(const MembershipOracle& oracle, const Eigen::VectorXd& y);
/// y in Gamma X up to the eps shell.
MembershipDecision centroid_membership(const MembershipOracle& oracle, const Eigen::VectorXd& y);

/// Largest t >= 0 (to within `tol` in distance along d) such that x + t d is
/// declared feasible. x must be feasible.
double boundary_along_line(const ConvexBodyOracle& body, const Eigen::VectorXd& x, const Eigen::VectorXd& d,
                           double tol);

/// Gauge (Minkowski functional) of y: the t with y / t on the weak boundary.
/// `tol` <= 0 selects shell() / 8.
double gauge(const ConvexBodyOracle& body, const Eigen::VectorXd& y, double tol = 0.0);

}  // namespace heavyica
