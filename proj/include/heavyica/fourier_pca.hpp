#pragma once

#include "heavyica/sources.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <vector>

namespace heavyica {

/// Empirical characteristic function and its first two derivatives at u.
struct CharFnEstimate {
  Eigen::VectorXd u;
  std::complex<double> phi;
  Eigen::VectorXcd grad;  // E[i x e^{i u.x}]
  Eigen::MatrixXcd hess;  // -E[x x^T e^{i u.x}]
  std::size_t N_used = 0;
};

/// Evaluated on the rows as given; callers center beforehand if needed.
CharFnEstimate estimate_char_fn(const Eigen::MatrixXd& data, const Eigen::VectorXd& u);

struct PsiMatrix {
  Eigen::MatrixXd Psi;  // real part of the Hessian of log phi, symmetrized
  Eigen::VectorXd u;
  std::complex<double> phi;
  double max_imag = 0.0;  // largest discarded imaginary entry
};

struct PsiOptions {
  double phi_floor = 0.1;
  bool center = true;  // subtract the empirical mean first
};

/// Psi(u) = D^2 phi / phi - (D phi)(D phi)^T / phi^2 from empirical means.
/// Throws Error(numerical) when |phi(u)| < phi_floor.
PsiMatrix estimate_psi(const SampleMatrix& samples, const Eigen::VectorXd& u, const PsiOptions& options = {});

struct RecoveryParams {
  std::size_t min_probes = 5;   // probes always compared
  std::size_t max_probes = 40;  // give up after this many
  double gap_floor = 0.05;      // minimum relative eigenvalue gap
  PsiOptions psi;
  std::uint64_t seed = 0;

  void validate() const;
};

struct UnitaryRecovery {
  Eigen::MatrixXd vectors;  // unit columns
  Eigen::VectorXd eigenvalues;
  Eigen::VectorXd probe;
  double gap = 0.0;
  double max_imag = 0.0;
  std::size_t probes_tried = 0;
  std::vector<double> gaps;
};

/// Smallest distance between consecutive sorted eigenvalues over the largest
/// absolute eigenvalue.
double relative_eigen_gap(const Eigen::VectorXd& eigenvalues);

/// Probe k is g / max(1, |g|) with g ~ N(0, sigma^2 I) drawn from
/// derive_seed(seed, "fpca:probe", k), sigma = 1 / (2 median |x|). At least
/// min_probes are evaluated and the widest gap wins; probing continues past
/// min_probes only while no probe clears the gap floor.
UnitaryRecovery recover_unitary(const SampleMatrix& samples, const RecoveryParams& params);

/// max over probes of |Psi_a(u) - Psi_b(u)|_F.
double psi_closeness(const SampleMatrix& a, const SampleMatrix& b, const std::vector<Eigen::VectorXd>& probes,
                     const PsiOptions& options = {});

}  // namespace heavyica
