#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace heavyica {

/// H(u) = (1/N) sum_i |<x_i, u>|, the support function of the empirical
/// centroid body. Positively homogeneous and subadditive in u.
double support_functional(const Eigen::MatrixXd& samples, const Eigen::VectorXd& u);

/// h(theta) = (1/N) sum_i |<x_i, theta/|theta|>|. Throws on a zero direction.
double directional_abs_moment(const Eigen::MatrixXd& samples, const Eigen::VectorXd& theta);

/// Parameters of the (1+gamma)-moment concentration bound.
struct MomentBound {
  double M = 2.0;      // bound on E|S_i|^{1+gamma}
  double gamma = 0.5;  // moment excess; the sample-size formula also accepts gamma = 1
  double eps = 0.1;    // target accuracy of the directional moment
  double delta = 0.1;  // failure probability

  void validate() const;
};

/// ceil((8 M n s_M^{1+gamma} / (eps^2 delta))^{3/gamma}), saturating at
/// UINT64_MAX. Sample count after which a directional first absolute moment
/// of an n-dimensional mixture with sigma_max(A) <= s_M is eps-accurate with
/// probability 1 - delta.
std::uint64_t required_samples(const MomentBound& bound, std::size_t n, double s_M);

/// ceil((8M/eps)^{1/2 + 1/gamma}): minimum N for the one-dimensional deviation bound.
std::uint64_t lemma_min_samples(double M, double eps, double gamma);

/// 8M / (eps^2 N^{gamma/3}): deviation probability bound at N samples.
double deviation_probability_bound(double M, double eps, double gamma, double N);

}  // namespace heavyica
