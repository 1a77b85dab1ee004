#include "heavyica/sources.hpp"

#include "heavyica/error.hpp"
#include "heavyica/parallel.hpp"
#include "heavyica/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace heavyica {

std::string_view to_string(SourceFamily family) {
  switch (family) {
    case SourceFamily::pareto: return "pareto";
    case SourceFamily::student_t: return "student_t";
    case SourceFamily::cauchy: return "cauchy";
    case SourceFamily::uniform: return "uniform";
    case SourceFamily::gaussian: return "gaussian";
  }
  return "unknown";
}

SourceFamily parse_source_family(std::string_view name) {
  for (auto f : {SourceFamily::pareto, SourceFamily::student_t, SourceFamily::cauchy, SourceFamily::uniform,
                 SourceFamily::gaussian}) {
    if (name == to_string(f)) return f;
  }
  throw Error(ErrorKind::configuration, "unknown source family '" + std::string(name) + "'");
}

void SourceSpec::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::configuration, "source scale must be finite and > 0");
  }
  if ((family == SourceFamily::pareto || family == SourceFamily::student_t) && (!(alpha > 0.0) || !std::isfinite(alpha))) {
    throw Error(ErrorKind::configuration, std::string(to_string(family)) + " shape parameter must be > 0");
  }
  if (normalize && !first_abs_moment()) {
    throw Error(ErrorKind::configuration,
                std::string(to_string(family)) + " source has infinite first absolute moment; cannot normalize E|S| = 1");
  }
}

std::optional<double> SourceSpec::first_abs_moment() const {
  switch (family) {
    case SourceFamily::pareto:
      if (alpha <= 1.0) return std::nullopt;
      return scale * alpha / (alpha - 1.0);
    case SourceFamily::student_t: {
      if (alpha <= 1.0) return std::nullopt;
      const double nu = alpha;
      const double log_ratio = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu);
      return scale * 2.0 * std::sqrt(nu) * std::exp(log_ratio) / (std::sqrt(std::numbers::pi) * (nu - 1.0));
    }
    case SourceFamily::cauchy: return std::nullopt;
    case SourceFamily::uniform: return 0.5 * scale;
    case SourceFamily::gaussian: return scale * std::sqrt(2.0 / std::numbers::pi);
  }
  return std::nullopt;
}

bool SourceSpec::has_moment_beyond_first() const {
  switch (family) {
    case SourceFamily::pareto:
    case SourceFamily::student_t: return alpha > 1.0;
    case SourceFamily::cauchy: return false;
    case SourceFamily::uniform:
    case SourceFamily::gaussian: return true;
  }
  return false;
}

void SampleMatrix::validate() const {
  if (data.rows() < 1 || data.cols() < 1) throw Error(ErrorKind::configuration, "sample matrix is empty");
  if (!data.allFinite()) throw Error(ErrorKind::numerical, "sample matrix has non-finite entries");
}

void IcaModel::validate() const {
  if (n == 0 || sources.size() != n || static_cast<std::size_t>(A.rows()) != n ||
      static_cast<std::size_t>(A.cols()) != n) {
    throw Error(ErrorKind::dimension_mismatch, "model dimension, source count and mixing matrix disagree");
  }
  for (const auto& s : sources) s.validate();
  if (!A.allFinite()) throw Error(ErrorKind::numerical, "mixing matrix has non-finite entries");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  const double smax = sv(0), smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || !std::isfinite(smax / smin)) throw Error(ErrorKind::numerical, "mixing matrix is singular");
  if (!(s_m > 0.0) || s_m > s_M) throw Error(ErrorKind::configuration, "singular value bounds need 0 < s_m <= s_M");
  const double slack = 1e-12 * smax;
  if (s_m > smin + slack || s_M < smax - slack) {
    throw Error(ErrorKind::configuration, "singular value bounds do not bracket the spectrum of A");
  }
}

bool IcaModel::is_unitary(double tol) const {
  return A.rows() == A.cols() &&
         (A.transpose() * A - Eigen::MatrixXd::Identity(A.cols(), A.cols())).cwiseAbs().maxCoeff() <= tol;
}

IcaModel make_model(std::vector<SourceSpec> sources, Eigen::MatrixXd A) {
  IcaModel model;
  model.n = sources.size();
  model.sources = std::move(sources);
  model.A = std::move(A);
  if (static_cast<std::size_t>(model.A.rows()) != model.n || model.A.rows() != model.A.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "mixing matrix must be n x n with n = number of sources");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(model.A);
  model.s_M = svd.singularValues()(0);
  model.s_m = svd.singularValues()(model.n - 1);
  model.validate();
  return model;
}

namespace {

Eigen::MatrixXd gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  CounterRng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd G(rows, cols);
  for (Eigen::Index j = 0; j < G.cols(); ++j)
    for (Eigen::Index i = 0; i < G.rows(); ++i) G(i, j) = normal(rng);
  return G;
}

double draw(const SourceSpec& spec, CounterRng& rng) {
  switch (spec.family) {
    case SourceFamily::pareto: {
      const double u = 1.0 - rng.uniform();  // (0, 1]
      double v = spec.scale * std::pow(u, -1.0 / spec.alpha);
      if (spec.symmetric && (rng() >> 63)) v = -v;
      return v;
    }
    case SourceFamily::student_t: return spec.scale * std::student_t_distribution<double>(spec.alpha)(rng);
    case SourceFamily::cauchy: return std::cauchy_distribution<double>(0.0, spec.scale)(rng);
    case SourceFamily::uniform: return spec.scale * (2.0 * rng.uniform() - 1.0);
    case SourceFamily::gaussian: return spec.scale * std::normal_distribution<double>()(rng);
  }
  return 0.0;
}

}  // namespace

Eigen::MatrixXd random_orthogonal(std::size_t n, std::uint64_t seed) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(n, n, seed));
  Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < Q.cols(); ++j)
    if (R(j, j) < 0) Q.col(j) *= -1.0;
  return Q;
}

Eigen::MatrixXd random_unit_column_matrix(std::size_t n, double max_cond, std::uint64_t seed) {
  if (!(max_cond >= 1.0)) throw Error(ErrorKind::configuration, "condition number bound must be >= 1");
  for (std::uint64_t attempt = 0; attempt < 100000; ++attempt) {
    Eigen::MatrixXd A = gaussian_matrix(n, n, derive_seed(seed, "sources:random_matrix", attempt));
    A.colwise().normalize();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& sv = svd.singularValues();
    if (sv(n - 1) > 0.0 && sv(0) / sv(n - 1) <= max_cond) return A;
  }
  throw Error(ErrorKind::convergence, "could not draw a matrix within the condition-number bound");
}

SampleMatrix sample_sources(std::span<const SourceSpec> specs, std::size_t N, std::uint64_t seed) {
  if (N < 1) throw Error(ErrorKind::configuration, "sample count must be >= 1");
  if (specs.empty()) throw Error(ErrorKind::configuration, "no source specs given");
  std::vector<double> divisor(specs.size(), 1.0);
  for (std::size_t j = 0; j < specs.size(); ++j) {
    specs[j].validate();
    if (specs[j].normalize) divisor[j] = *specs[j].first_abs_moment();
  }

  SampleMatrix out;
  out.seed = seed;
  out.data.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(specs.size()));
  parallel_chunks(N, 1 << 14, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      CounterRng rng(derive_seed(seed, "sources:row", i));
      for (std::size_t j = 0; j < specs.size(); ++j) {
        out.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = draw(specs[j], rng) / divisor[j];
      }
    }
  });
  return out;
}

SampleMatrix mix(const IcaModel& model, const SampleMatrix& sources) {
  if (sources.dim() != model.A.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "source samples have " + std::to_string(sources.dim()) +
                                                   " columns, model expects " + std::to_string(model.A.cols()));
  }
  SampleMatrix out;
  out.seed = sources.seed;
  out.model_id = sources.model_id;
  out.data = sources.data * model.A.transpose();
  return out;
}

SampleMatrix symmetrize(const SampleMatrix& samples) {
  const Eigen::Index N = samples.rows();
  if (N % 2 != 0) throw Error(ErrorKind::configuration, "symmetrize needs an even number of rows; trim first");
  if (N == 0) throw Error(ErrorKind::configuration, "symmetrize needs at least two rows");
  SampleMatrix out;
  out.seed = samples.seed;
  out.model_id = samples.model_id;
  const Eigen::Index half = N / 2;
  out.data.resize(half, samples.dim());
  for (Eigen::Index k = 0; k < half; ++k) out.data.row(k) = samples.data.row(2 * k) - samples.data.row(2 * k + 1);
  return out;
}

double raw_moment(std::span<const double> values, int k) {
  if (values.empty()) throw Error(ErrorKind::configuration, "moment of empty sample");
  double acc = 0.0;
  for (double v : values) acc += std::pow(v, k);
  return acc / static_cast<double>(values.size());
}

double cum4(std::span<const double> values) {
  if (values.size() < 4) throw Error(ErrorKind::configuration, "cum4 needs at least 4 values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double mu2 = 0.0, mu4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    const double d2 = d * d;
    mu2 += d2;
    mu4 += d2 * d2;
  }
  mu2 /= n;
  mu4 /= n;
  return mu4 - 3.0 * mu2 * mu2;
}

Cum4Estimate cum4_with_error(std::span<const double> values, std::size_t batches) {
  if (batches < 2 || values.size() < 4 * batches) {
    throw Error(ErrorKind::configuration, "cum4_with_error needs >= 2 batches of >= 4 values");
  }
  const std::size_t block = values.size() / batches;
  std::vector<double> per_batch(batches);
  for (std::size_t b = 0; b < batches; ++b) per_batch[b] = cum4(values.subspan(b * block, block));
  double mean = 0.0;
  for (double v : per_batch) mean += v;
  mean /= static_cast<double>(batches);
  double var = 0.0;
  for (double v : per_batch) var += (v - mean) * (v - mean);
  var /= static_cast<double>(batches - 1);
  return {cum4(values), std::sqrt(var / static_cast<double>(batches))};
}

std::vector<double> column(const SampleMatrix& samples, Eigen::Index j) {
  std::vector<double> out(static_cast<std::size_t>(samples.rows()));
  Eigen::Map<Eigen::VectorXd>(out.data(), samples.rows()) = samples.data.col(j);
  return out;
}

}  // namespace heavyica
