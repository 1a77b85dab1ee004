#pragma once

#include "heavyica/sources.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace heavyica {

/// R is the damping radius; 0 asks select_R to search for one. The search
/// schedule starts at the `start_quantile` quantile of |x| and doubles up
/// to `max_doublings` times.
struct DampingParams {
  double R = 0.0;
  double C1 = 0.5;
  double Delta = 0.05;
  double start_quantile = 0.6;
  std::size_t max_doublings = 12;
  std::size_t random_starts = 6;  // extra sphere starts on top of the axes
  std::uint64_t seed = 0;

  void validate() const;
};

struct DampedBatch {
  SampleMatrix accepted;
  std::vector<Eigen::Index> source_rows;  // input row of each accepted row
  double acceptance_rate = 0.0;
  double R = 0.0;
  std::size_t attempted = 0;
};

/// Keep each row independently with probability exp(-|x|^2 / R^2). The coin
/// for row i comes from derive_seed(seed, "damp:row", i).
DampedBatch damp(const SampleMatrix& samples, double R, std::uint64_t seed);

/// (1/N) sum exp(-|x_i|^2 / R^2), the deterministic estimate of K_{X_R}.
double acceptance_estimate(const SampleMatrix& samples, double R);

struct DirectionalCum4 {
  double value = 0.0;  // signed fourth cumulant in `direction`
  Eigen::VectorXd direction;
};

/// Direction minimizing |cum4(<a, X_R>)| over the unit sphere, where X_R is
/// the damped distribution represented by importance weights
/// exp(-|x|^2 / R^2) on the given samples. Projected gradient descent from
/// the +-axes and `random_starts` random unit vectors.
DirectionalCum4 min_directional_cum4(const SampleMatrix& samples, double R, std::size_t random_starts,
                                     std::uint64_t seed);

/// cum4(<a, X_R>) for a fixed unit direction, same weighting.
double directional_cum4(const SampleMatrix& samples, double R, const Eigen::VectorXd& a);

struct RTrial {
  double R = 0.0;
  double acceptance = 0.0;
  double min_abs_cum4 = 0.0;
  bool accepted = false;
};

struct RSelection {
  DampingParams params;  // R filled in
  std::vector<RTrial> trials;
};

/// Smallest R on the schedule with acceptance >= C1 and
/// min_a |cum4(<a, X_R>)| >= Delta.
RSelection select_R(const SampleMatrix& samples, const DampingParams& params);

struct MomentBoundReport {
  double R = 0.0;
  double acceptance_rate = 0.0;
  double bound = 0.0;  // R^4 / C1 * (1 + slack)
  Eigen::VectorXd m4;
  Eigen::VectorXd cum4;
  bool holds = false;
};

/// Per-coordinate fourth moments of a damped batch against R^4 / C1 with
/// relative slack.
MomentBoundReport damped_cum4_bound_check(const DampedBatch& damped, double C1 = 0.5, double slack = 0.1);

}  // namespace heavyica
