#include "heavyica/pipeline.hpp"

#include "heavyica/assignment.hpp"
#include "heavyica/error.hpp"
#include "heavyica/random.hpp"

#include <cmath>
#include <utility>

namespace heavyica {

namespace {

template <class F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.stage().empty() ? e.with_stage(name) : e;
  }
}

double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
}

}  // namespace

double amari_index(const Eigen::MatrixXd& P) {
  const Eigen::Index n = P.rows();
  if (n != P.cols() || n == 0) throw Error(ErrorKind::dimension_mismatch, "Amari index needs a square matrix");
  if (n == 1) return 0.0;
  const Eigen::MatrixXd a = P.cwiseAbs();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += a.row(i).sum() / a.row(i).maxCoeff() - 1.0;
  for (Eigen::Index j = 0; j < n; ++j) total += a.col(j).sum() / a.col(j).maxCoeff() - 1.0;
  return total / (2.0 * static_cast<double>(n) * static_cast<double>(n - 1));
}

MatchResult match_and_score(const Eigen::MatrixXd& true_A, const Eigen::MatrixXd& recovered) {
  const Eigen::Index n = true_A.cols();
  if (true_A.rows() != n || recovered.rows() != n || recovered.cols() != n) {
    throw Error(ErrorKind::dimension_mismatch, "true and recovered matrices must both be n x n");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::abs(true_A.col(j).norm() - 1.0) > 1e-9) {
      throw Error(ErrorKind::configuration, "columns of the true mixing matrix must have unit norm");
    }
  }
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double bn = recovered.col(j).norm();
      const double c = bn > 0.0 ? true_A.col(i).dot(recovered.col(j)) / bn : 0.0;
      cost(i, j) = 1.0 - std::abs(c);
    }
  }
  MatchResult m;
  m.permutation = min_cost_assignment(cost);
  m.signs.resize(static_cast<std::size_t>(n));
  m.errors.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto b = recovered.col(static_cast<Eigen::Index>(m.permutation[static_cast<std::size_t>(i)]));
    const int sign = true_A.col(i).dot(b) >= 0.0 ? 1 : -1;
    m.signs[static_cast<std::size_t>(i)] = sign;
    m.errors[i] = (true_A.col(i) - sign * b).norm();
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(recovered);
  if (!lu.isInvertible()) throw Error(ErrorKind::numerical, "recovered matrix is singular");
  m.amari_index = amari_index(lu.solve(true_A));
  return m;
}

NearestUnitary nearest_unitary(const Eigen::MatrixXd& E_hat) {
  if (E_hat.rows() != E_hat.cols() || E_hat.size() == 0) {
    throw Error(ErrorKind::dimension_mismatch, "nearest_unitary needs a square matrix");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(E_hat, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(s.size() - 1) <= 1e-12 * s(0)) {
    throw Error(ErrorKind::numerical, "matrix is rank deficient");
  }
  return {svd.matrixU() * svd.matrixV().transpose(), (s.array() - 1.0).abs().maxCoeff()};
}

Orthogonalizer baseline_whitening(const SampleMatrix& samples) {
  samples.validate();
  if (samples.rows() < 2) throw Error(ErrorKind::configuration, "whitening needs at least two samples");
  const Eigen::MatrixXd centered = samples.data.rowwise() - samples.data.colwise().mean();
  CovarianceEstimate cov;
  cov.Sigma_hat = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
  cov.Sigma_hat = (0.5 * (cov.Sigma_hat + cov.Sigma_hat.transpose())).eval();
  cov.samples = static_cast<std::size_t>(samples.rows());
  return {inverse_sqrt_spd(cov.Sigma_hat), cov};
}

double offdiagonal_ratio(const Eigen::MatrixXd& B, const Eigen::MatrixXd& A) {
  const Eigen::MatrixXd BA = B * A;
  const Eigen::MatrixXd G = BA.transpose() * BA;
  Eigen::MatrixXd off = G;
  off.diagonal().setZero();
  return spectral_norm(off) / spectral_norm(G);
}

RecoveryResult run_pipeline(const SampleMatrix& samples, const PipelineConfig& config,
                            const std::optional<Eigen::MatrixXd>& true_A) {
  RecoveryResult result;
  auto& diag = result.diagnostics;
  const Eigen::Index n = samples.dim();
  diag.raw_samples = static_cast<std::size_t>(samples.rows());

  SampleMatrix X = stage("symmetrize", [&] {
    samples.validate();
    if (!config.symmetrize) return samples;
    if (samples.rows() % 2 != 0) {
      SampleMatrix trimmed = samples;
      trimmed.data.conservativeResize(samples.rows() - 1, Eigen::NoChange);
      return symmetrize(trimmed);
    }
    return symmetrize(samples);
  });
  diag.symmetrized_samples = static_cast<std::size_t>(X.rows());

  SampleMatrix Y = stage("orthogonalize", [&] {
    if (config.skip_orthogonalization) {
      result.B = Eigen::MatrixXd::Identity(n, n);
      return X;
    }
    OrthogonalizeConfig oc = config.orthogonalize;
    oc.seed = derive_seed(config.seed, "pipeline:orthogonalize");
    // E|S - S'| <= 2 E|S|, so the symmetrized body can be twice as wide.
    if (config.symmetrize) oc.oracle.R_outer *= 2.0;
    OrthogonalizeResult orth = orthogonalize(X, oc);
    result.B = orth.orthogonalizer.B;
    diag.oracle = orth.oracle_stats;
    diag.walk = orth.orthogonalizer.provenance.walk;
    diag.Sigma_hat = orth.orthogonalizer.provenance.Sigma_hat;
    return std::move(orth.transformed);
  });

  const DampedBatch damped = stage("damp", [&] {
    DampingParams dp = config.damping;
    dp.seed = derive_seed(config.seed, "pipeline:select_R");
    if (dp.R == 0.0) {
      RSelection sel = select_R(Y, dp);
      diag.R_trials = sel.trials;
      dp = sel.params;
    }
    DampedBatch batch = damp(Y, dp.R, derive_seed(config.seed, "pipeline:damp"));
    diag.moment_bound = damped_cum4_bound_check(batch, dp.C1);
    return batch;
  });
  diag.R = damped.R;
  diag.acceptance_rate = damped.acceptance_rate;
  diag.damped_samples = static_cast<std::size_t>(damped.accepted.rows());

  const UnitaryRecovery rec = stage("recover", [&] {
    RecoveryParams rp = config.recovery;
    rp.seed = derive_seed(config.seed, "pipeline:recover");
    return recover_unitary(damped.accepted, rp);
  });
  diag.eigen_gap = rec.gap;
  diag.probe_gaps = rec.gaps;
  diag.psi_max_imag = rec.max_imag;
  diag.probe = rec.probe;

  stage("backmap", [&] {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(result.B);
    if (!lu.isInvertible()) throw Error(ErrorKind::numerical, "orthogonalizer is singular");
    result.recovered_columns = lu.solve(rec.vectors);
    for (Eigen::Index j = 0; j < n; ++j) result.recovered_columns.col(j).normalize();
    return 0;
  });

  if (true_A) {
    result.match = stage("evaluate", [&] { return match_and_score(*true_A, result.recovered_columns); });
  }
  return result;
}

}  // namespace heavyica
