#include "heavyica/body_geometry.hpp"

#include "heavyica/error.hpp"
#include "heavyica/parallel.hpp"
#include "heavyica/random.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace heavyica {

void WalkParams::validate() const {
  if (chains == 0) throw Error(ErrorKind::configuration, "walk needs at least one chain");
  if (stuck_window == 0) throw Error(ErrorKind::configuration, "walk stuck window must be positive");
  if (!(stuck_floor >= 0.0) || stuck_floor >= 1.0) {
    throw Error(ErrorKind::configuration, "walk stuck floor must lie in [0, 1)");
  }
  if (boundary_tol < 0.0) throw Error(ErrorKind::configuration, "walk boundary tolerance must be >= 0");
}

namespace {

struct ChainOutput {
  Eigen::MatrixXd points;
  WalkDiagnostics walk;
};

ChainOutput run_chain(const ConvexBodyOracle& body, std::size_t count, std::size_t burn_in, std::size_t thinning,
                      double tol, const WalkParams& walk, std::uint64_t seed) {
  const Eigen::Index n = body.dim();
  CounterRng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ChainOutput out;
  out.points.resize(static_cast<Eigen::Index>(count), n);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd d(n), next(n);
  std::size_t window_moves = 0, window_steps = 0;
  const std::size_t total = burn_in + count * thinning;
  std::size_t stored = 0;
  for (std::size_t step = 1; step <= total; ++step) {
    for (Eigen::Index j = 0; j < n; ++j) d[j] = normal(rng);
    d.normalize();
    const double fwd = boundary_along_line(body, x, d, tol);
    const double bwd = boundary_along_line(body, x, -d, tol);
    const double t = -bwd + (fwd + bwd) * rng.uniform();
    next = x + t * d;
    ++out.walk.steps;
    ++window_steps;
    if (fwd + bwd > 0.0 && body.query(next).feasible()) {
      x = next;
      ++out.walk.moves;
      ++window_moves;
    }
    if (window_steps == walk.stuck_window) {
      if (static_cast<double>(window_moves) < walk.stuck_floor * static_cast<double>(window_steps)) {
        throw Error(ErrorKind::sampling, "hit-and-run walk is stuck: too few accepted moves");
      }
      window_steps = window_moves = 0;
    }
    if (step > burn_in && (step - burn_in) % thinning == 0) {
      out.points.row(static_cast<Eigen::Index>(stored++)) = x.transpose();
    }
  }
  return out;
}

}  // namespace

BodySamples sample_body(const ConvexBodyOracle& body, std::size_t K, const WalkParams& walk, std::uint64_t seed) {
  walk.validate();
  if (K == 0) throw Error(ErrorKind::configuration, "body sample count must be positive");
  const std::size_t n = static_cast<std::size_t>(body.dim());
  const std::size_t burn_in = walk.burn_in ? walk.burn_in : 50 * n * n;
  const std::size_t thinning = walk.thinning ? walk.thinning : n * n;
  const double tol = walk.boundary_tol > 0.0 ? walk.boundary_tol : body.shell() / 4.0;
  const std::size_t chains = std::min(walk.chains, K);

  std::vector<ChainOutput> outputs(chains);
  parallel_chunks(chains, 1, [&](std::size_t c, std::size_t, std::size_t) {
    const std::size_t count = K / chains + (c < K % chains ? 1 : 0);
    outputs[c] = run_chain(body, count, burn_in, thinning, tol, walk, derive_seed(seed, "body:chain", c));
  });

  BodySamples result;
  result.points.data.resize(static_cast<Eigen::Index>(K), body.dim());
  result.points.seed = seed;
  result.points.model_id = "body-walk";
  Eigen::Index row = 0;
  for (const auto& out : outputs) {
    result.points.data.middleRows(row, out.points.rows()) = out.points;
    row += out.points.rows();
    result.walk.steps += out.walk.steps;
    result.walk.moves += out.walk.moves;
  }
  return result;
}

CubeBody::CubeBody(Eigen::Index n, double half_width) : n_(n), a_(half_width) {
  if (n < 1 || !(half_width > 0.0)) throw Error(ErrorKind::configuration, "cube needs n >= 1 and a > 0");
}

MembershipDecision CubeBody::query(const Eigen::VectorXd& y) const {
  if (y.size() != n_) throw Error(ErrorKind::dimension_mismatch, "query point has wrong dimension");
  Eigen::Index j = 0;
  const double top = y.cwiseAbs().maxCoeff(&j);
  MembershipDecision d;
  d.queries_used = 1;
  d.margin = a_ - top;
  if (top <= a_) return d;
  d.verdict = Verdict::infeasible;
  d.witness = Eigen::VectorXd::Zero(n_);
  d.witness[j] = y[j] > 0.0 ? 1.0 : -1.0;
  d.witness_offset = a_;
  return d;
}

CrossPolytopeBody::CrossPolytopeBody(Eigen::Index n, double radius) : n_(n), r_(radius) {
  if (n < 1 || !(radius > 0.0)) throw Error(ErrorKind::configuration, "cross-polytope needs n >= 1 and r > 0");
}

MembershipDecision CrossPolytopeBody::query(const Eigen::VectorXd& y) const {
  if (y.size() != n_) throw Error(ErrorKind::dimension_mismatch, "query point has wrong dimension");
  const double l1 = y.cwiseAbs().sum();
  const double rn = std::sqrt(static_cast<double>(n_));
  MembershipDecision d;
  d.queries_used = 1;
  d.margin = (r_ - l1) / rn;
  if (l1 <= r_) return d;
  d.verdict = Verdict::infeasible;
  d.witness = y.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }) / rn;
  d.witness_offset = r_ / rn;
  return d;
}

CovarianceEstimate estimate_covariance(const SampleMatrix& body_samples, double eps_c) {
  body_samples.validate();
  const auto& X = body_samples.data;
  Eigen::MatrixXd S = (X.transpose() * X) / static_cast<double>(X.rows());
  S = 0.5 * (S + S.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0.0) || eig.eigenvalues().minCoeff() <= 1e-12 * top) {
    throw Error(ErrorKind::numerical, "body covariance is rank deficient; the sampler did not explore the body");
  }
  CovarianceEstimate c;
  c.Sigma_hat = std::move(S);
  c.eps_c = eps_c;
  c.samples = static_cast<std::size_t>(X.rows());
  return c;
}

Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols() || M.rows() == 0) throw Error(ErrorKind::dimension_mismatch, "matrix must be square");
  const Eigen::MatrixXd sym = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw Error(ErrorKind::numerical, "eigendecomposition failed");
  const Eigen::VectorXd& w = eig.eigenvalues();
  const double top = w.maxCoeff();
  if (!(top > 0.0) || w.minCoeff() < 1e-12 * top) {
    throw Error(ErrorKind::numerical, "singular covariance: eigenvalue below floor");
  }
  const Eigen::MatrixXd& V = eig.eigenvectors();
  Eigen::MatrixXd B = V * w.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
  return 0.5 * (B + B.transpose());
}

Orthogonalizer orthogonalizer_from_cov(const CovarianceEstimate& cov) {
  return {inverse_sqrt_spd(cov.Sigma_hat), cov};
}

double covariance_accuracy(double eps, std::size_t n) {
  return eps / (2.0 * std::pow(static_cast<double>(n + 1), 4));
}

SampleMatrix apply_linear(const SampleMatrix& samples, const Eigen::MatrixXd& B) {
  if (B.cols() != samples.dim()) throw Error(ErrorKind::dimension_mismatch, "matrix does not match sample dimension");
  SampleMatrix out;
  out.data = samples.data * B.transpose();
  out.seed = samples.seed;
  out.model_id = samples.model_id;
  return out;
}

OrthogonalizeResult orthogonalize(const SampleMatrix& samples, const OrthogonalizeConfig& config) {
  OracleParams params = config.oracle;
  params.seed = derive_seed(config.seed, "oracle:centroid");
  const MembershipOracle oracle(samples, params, BodyTag::centroid);
  BodySamples body = sample_body(oracle, config.body_samples, config.walk, derive_seed(config.seed, "body:walk"));
  CovarianceEstimate cov =
      estimate_covariance(body.points, covariance_accuracy(params.eps, static_cast<std::size_t>(samples.dim())));
  cov.walk = body.walk;
  OrthogonalizeResult result{orthogonalizer_from_cov(cov), {}, oracle.stats()};
  result.transformed = apply_linear(samples, result.orthogonalizer.B);
  return result;
}

}  // namespace heavyica
