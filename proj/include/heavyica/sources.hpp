#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace heavyica {

enum class SourceFamily { pareto, student_t, cauchy, uniform, gaussian };

std::string_view to_string(SourceFamily family);
SourceFamily parse_source_family(std::string_view name);

/// One independent source component.
///
/// `alpha` is the Pareto tail index or the Student-t degrees of freedom and
/// is ignored by the other families. `scale` multiplies the base variate
/// (Pareto minimum, uniform half-width, gaussian sigma, Cauchy/Student-t
/// scale). With `normalize` set the variate is divided by its closed-form
/// first absolute moment, so E|S| = 1 exactly and `scale` has no effect.
///
/// Pareto draws carry an independent random sign when `symmetric` is set;
/// the one-sided variant is kept for exercising `symmetrize`.
struct SourceSpec {
  SourceFamily family = SourceFamily::gaussian;
  double alpha = 2.0;
  double scale = 1.0;
  bool normalize = true;
  bool symmetric = true;

  /// Throws Error(configuration) on out-of-range parameters, or when
  /// normalization is requested but E|S| is infinite.
  void validate() const;

  /// Closed-form E|S| of the unnormalized variate; nullopt when infinite.
  std::optional<double> first_abs_moment() const;

  /// True when the distribution is symmetric about zero.
  bool is_symmetric() const { return family != SourceFamily::pareto || symmetric; }

  /// True when E|S|^{1+gamma} < inf for some gamma > 0.
  bool has_moment_beyond_first() const;
};

struct SampleMatrix {
  Eigen::MatrixXd data;  // N x n, one observation per row
  std::uint64_t seed = 0;
  std::string model_id;

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }

  /// Throws unless N >= 1 and every entry is finite.
  void validate() const;
};

struct IcaModel {
  std::size_t n = 0;
  std::vector<SourceSpec> sources;
  Eigen::MatrixXd A;
  double s_m = 0.0;  // lower bound on sigma_min(A)
  double s_M = 0.0;  // upper bound on sigma_max(A)

  void validate() const;

  /// True when A^T A = I within `tol`.
  bool is_unitary(double tol = 1e-9) const;
};

/// Model with tight singular-value bounds computed from A.
IcaModel make_model(std::vector<SourceSpec> sources, Eigen::MatrixXd A);

/// Uniformly random orthogonal matrix (QR of a gaussian matrix, sign-fixed).
Eigen::MatrixXd random_orthogonal(std::size_t n, std::uint64_t seed);

/// Random matrix with unit-norm columns and condition number <= max_cond,
/// by rejection over gaussian draws.
Eigen::MatrixXd random_unit_column_matrix(std::size_t n, double max_cond, std::uint64_t seed);

/// Draw N i.i.d. rows of S. Row i depends only on (seed, i).
SampleMatrix sample_sources(std::span<const SourceSpec> specs, std::size_t N, std::uint64_t seed);

/// Rows of X = A S.
SampleMatrix mix(const IcaModel& model, const SampleMatrix& sources);

/// Pairwise differences of consecutive rows: row k = row(2k) - row(2k+1).
/// Requires an even number of rows.
SampleMatrix symmetrize(const SampleMatrix& samples);

/// Fourth cumulant of the empirical distribution,
/// m4 - 4 m3 m1 - 3 m2^2 + 12 m2 m1^2 - 6 m1^4. Evaluated on centered data,
/// where m1 = 0 and the formula reduces to mu4 - 3 mu2^2 (cumulants of
/// order >= 2 are shift invariant). Requires at least 4 values.
double cum4(std::span<const double> values);

struct Cum4Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// cum4 with a batch-means standard error over `batches` equal blocks.
Cum4Estimate cum4_with_error(std::span<const double> values, std::size_t batches = 20);

/// Empirical raw moment E[X^k].
double raw_moment(std::span<const double> values, int k);

std::vector<double> column(const SampleMatrix& samples, Eigen::Index j);

}  // namespace heavyica
