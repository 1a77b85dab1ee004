#include "heavyica/robust_moments.hpp"

#include "heavyica/error.hpp"

#include <cmath>
#include <limits>

namespace heavyica {

double support_functional(const Eigen::MatrixXd& samples, const Eigen::VectorXd& u) {
  if (samples.rows() == 0) throw Error(ErrorKind::configuration, "support function of an empty sample");
  if (u.size() != samples.cols()) throw Error(ErrorKind::dimension_mismatch, "direction has wrong dimension");
  return (samples * u).cwiseAbs().mean();
}

double directional_abs_moment(const Eigen::MatrixXd& samples, const Eigen::VectorXd& theta) {
  const double norm = theta.norm();
  if (!(norm > 0.0)) throw Error(ErrorKind::configuration, "direction must be nonzero");
  return support_functional(samples, theta / norm);
}

void MomentBound::validate() const {
  if (!(gamma > 0.0) || gamma > 1.0) throw Error(ErrorKind::configuration, "gamma must lie in (0, 1]");
  if (!(eps > 0.0) || !(delta > 0.0) || !(M > 0.0)) {
    throw Error(ErrorKind::configuration, "moment bound needs M, eps, delta > 0");
  }
}

namespace {

std::uint64_t saturating_ceil(double log_value) {
  // log_value is the natural log of the real-valued bound.
  constexpr double log_max = 43.668272375276554;  // ln(2^63)
  if (!(log_value < log_max)) return std::numeric_limits<std::uint64_t>::max();
  const double v = std::exp(log_value);
  // Guard against exp rounding an exact integer upward.
  const double r = std::round(v);
  if (std::abs(v - r) <= 1e-9 * v) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(v));
}

}  // namespace

std::uint64_t required_samples(const MomentBound& bound, std::size_t n, double s_M) {
  bound.validate();
  if (n == 0 || !(s_M > 0.0)) throw Error(ErrorKind::configuration, "required_samples needs n >= 1 and s_M > 0");
  const double base = 8.0 * bound.M * static_cast<double>(n) * std::pow(s_M, 1.0 + bound.gamma) /
                      (bound.eps * bound.eps * bound.delta);
  return saturating_ceil((3.0 / bound.gamma) * std::log(base));
}

std::uint64_t lemma_min_samples(double M, double eps, double gamma) {
  if (!(gamma > 0.0) || !(eps > 0.0) || !(M > 0.0)) {
    throw Error(ErrorKind::configuration, "lemma_min_samples needs M, eps, gamma > 0");
  }
  return saturating_ceil((0.5 + 1.0 / gamma) * std::log(8.0 * M / eps));
}

double deviation_probability_bound(double M, double eps, double gamma, double N) {
  return 8.0 * M / (eps * eps * std::pow(N, gamma / 3.0));
}

}  // namespace heavyica
