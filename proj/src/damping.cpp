#include "heavyica/damping.hpp"

#include "heavyica/error.hpp"
#include "heavyica/parallel.hpp"
#include "heavyica/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace heavyica {

namespace {

constexpr std::size_t kGrain = 8192;

struct WeightedData {
  Eigen::MatrixXd centered;  // rows x_i minus the weighted mean
  Eigen::VectorXd weights;   // normalized to sum 1
};

WeightedData weighted_data(const SampleMatrix& samples, double R) {
  WeightedData w;
  const double inv = 1.0 / (R * R);
  w.weights = (-samples.data.rowwise().squaredNorm() * inv).array().exp().matrix();
  const double total = w.weights.sum();
  if (!(total > 0.0)) throw Error(ErrorKind::numerical, "all damping weights underflowed; increase R");
  w.weights /= total;
  const Eigen::RowVectorXd mean = w.weights.transpose() * samples.data;
  w.centered = samples.data.rowwise() - mean;
  return w;
}

// Weighted cum4 of <a, x> and its gradient in a.
double cum4_and_gradient(const WeightedData& w, const Eigen::VectorXd& a, Eigen::VectorXd* grad) {
  const Eigen::VectorXd p = w.centered * a;
  const Eigen::ArrayXd p2 = p.array().square();
  const double mu2 = (w.weights.array() * p2).sum();
  const double mu4 = (w.weights.array() * p2.square()).sum();
  if (grad) {
    const Eigen::VectorXd coef = (w.weights.array() * (4.0 * p2 * p.array() - 12.0 * mu2 * p.array())).matrix();
    *grad = w.centered.transpose() * coef;
  }
  return mu4 - 3.0 * mu2 * mu2;
}

DirectionalCum4 descend(const WeightedData& w, Eigen::VectorXd a) {
  a.normalize();
  Eigen::VectorXd g;
  double c = cum4_and_gradient(w, a, &g);
  double step = 0.5;
  for (int it = 0; it < 100; ++it) {
    // Descend |c|: tangent component of sign(c) * grad.
    Eigen::VectorXd t = (c >= 0.0 ? 1.0 : -1.0) * g;
    t -= a.dot(t) * a;
    const double tn = t.norm();
    if (tn <= 1e-14 * (std::abs(c) + 1e-300)) break;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls) {
      Eigen::VectorXd trial = (a - step * t / tn).normalized();
      Eigen::VectorXd tg;
      const double tc = cum4_and_gradient(w, trial, &tg);
      if (std::abs(tc) < std::abs(c)) {
        a = std::move(trial);
        c = tc;
        g = std::move(tg);
        step = std::min(1.0, step * 2.0);
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved || step < 1e-10) break;
  }
  return {c, a};
}

}  // namespace

void DampingParams::validate() const {
  if (R < 0.0 || !std::isfinite(R)) throw Error(ErrorKind::configuration, "damping R must be >= 0 (0 = search)");
  if (!(C1 > 0.0) || C1 >= 1.0) throw Error(ErrorKind::configuration, "damping C1 must lie in (0, 1)");
  if (!(Delta > 0.0)) throw Error(ErrorKind::configuration, "damping Delta must be > 0");
  if (!(start_quantile > 0.0) || start_quantile > 1.0) {
    throw Error(ErrorKind::configuration, "damping start quantile must lie in (0, 1]");
  }
}

DampedBatch damp(const SampleMatrix& samples, double R, std::uint64_t seed) {
  if (!(R > 0.0)) throw Error(ErrorKind::configuration, "damping radius R must be > 0");
  samples.validate();
  const std::size_t N = static_cast<std::size_t>(samples.rows());
  const double inv = 1.0 / (R * R);
  std::vector<std::vector<Eigen::Index>> kept(chunk_count(N, kGrain));
  parallel_chunks(N, kGrain, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    auto& out = kept[chunk];
    for (std::size_t i = begin; i < end; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      CounterRng rng(derive_seed(seed, "damp:row", i));
      if (rng.uniform() < std::exp(-samples.data.row(row).squaredNorm() * inv)) out.push_back(row);
    }
  });
  DampedBatch batch;
  for (const auto& part : kept) batch.source_rows.insert(batch.source_rows.end(), part.begin(), part.end());
  if (batch.source_rows.empty()) {
    throw Error(ErrorKind::sampling, "damping accepted no samples; increase R");
  }
  batch.accepted.data.resize(static_cast<Eigen::Index>(batch.source_rows.size()), samples.dim());
  for (std::size_t k = 0; k < batch.source_rows.size(); ++k) {
    batch.accepted.data.row(static_cast<Eigen::Index>(k)) = samples.data.row(batch.source_rows[k]);
  }
  batch.accepted.seed = seed;
  batch.accepted.model_id = samples.model_id;
  batch.attempted = N;
  batch.R = R;
  batch.acceptance_rate = static_cast<double>(batch.source_rows.size()) / static_cast<double>(N);
  return batch;
}

double acceptance_estimate(const SampleMatrix& samples, double R) {
  if (!(R > 0.0)) throw Error(ErrorKind::configuration, "damping radius R must be > 0");
  if (samples.rows() == 0) throw Error(ErrorKind::configuration, "no samples");
  return (-samples.data.rowwise().squaredNorm() / (R * R)).array().exp().mean();
}

double directional_cum4(const SampleMatrix& samples, double R, const Eigen::VectorXd& a) {
  if (a.size() != samples.dim()) throw Error(ErrorKind::dimension_mismatch, "direction has wrong dimension");
  if (!(a.norm() > 0.0)) throw Error(ErrorKind::configuration, "direction must be nonzero");
  return cum4_and_gradient(weighted_data(samples, R), a.normalized(), nullptr);
}

DirectionalCum4 min_directional_cum4(const SampleMatrix& samples, double R, std::size_t random_starts,
                                     std::uint64_t seed) {
  if (!(R > 0.0)) throw Error(ErrorKind::configuration, "damping radius R must be > 0");
  const WeightedData w = weighted_data(samples, R);
  const Eigen::Index n = samples.dim();
  std::vector<Eigen::VectorXd> starts;
  for (Eigen::Index j = 0; j < n; ++j) {
    starts.push_back(Eigen::VectorXd::Unit(n, j));
    starts.push_back(-Eigen::VectorXd::Unit(n, j));
  }
  CounterRng rng(derive_seed(seed, "damping:starts"));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < random_starts; ++k) {
    Eigen::VectorXd v(n);
    for (Eigen::Index j = 0; j < n; ++j) v[j] = normal(rng);
    starts.push_back(v);
  }
  DirectionalCum4 best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    DirectionalCum4 r = descend(w, s);
    if (std::abs(r.value) < std::abs(best.value)) best = std::move(r);
  }
  return best;
}

RSelection select_R(const SampleMatrix& samples, const DampingParams& params) {
  params.validate();
  samples.validate();
  std::vector<double> norms(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) norms[static_cast<std::size_t>(i)] = samples.data.row(i).norm();
  const auto q = static_cast<std::size_t>(std::ceil(params.start_quantile * static_cast<double>(norms.size()))) - 1;
  std::nth_element(norms.begin(), norms.begin() + static_cast<std::ptrdiff_t>(q), norms.end());
  double R = norms[q];
  if (!(R > 0.0)) throw Error(ErrorKind::numerical, "sample norms vanish; cannot start the R schedule");

  RSelection sel;
  sel.params = params;
  for (std::size_t k = 0; k <= params.max_doublings; ++k, R *= 2.0) {
    RTrial t;
    t.R = R;
    t.acceptance = acceptance_estimate(samples, R);
    if (t.acceptance >= params.C1) {
      t.min_abs_cum4 =
          std::abs(min_directional_cum4(samples, R, params.random_starts, derive_seed(params.seed, "damping:R", k))
                       .value);
      t.accepted = t.min_abs_cum4 >= params.Delta;
    }
    sel.trials.push_back(t);
    if (t.accepted) {
      sel.params.R = R;
      return sel;
    }
  }
  const RTrial& last = sel.trials.back();
  std::string why = last.acceptance < params.C1
                        ? "acceptance " + std::to_string(last.acceptance) + " below C1"
                        : "min |cum4| " + std::to_string(last.min_abs_cum4) + " below Delta";
  throw Error(ErrorKind::convergence, "R schedule exhausted at R = " + std::to_string(last.R) + ": " + why);
}

MomentBoundReport damped_cum4_bound_check(const DampedBatch& damped, double C1, double slack) {
  if (damped.accepted.rows() == 0) throw Error(ErrorKind::configuration, "damped batch is empty");
  MomentBoundReport rep;
  rep.R = damped.R;
  rep.acceptance_rate = damped.acceptance_rate;
  rep.bound = std::pow(damped.R, 4) / C1 * (1.0 + slack);
  const Eigen::Index n = damped.accepted.dim();
  rep.m4.resize(n);
  rep.cum4.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto col = column(damped.accepted, j);
    rep.m4[j] = raw_moment(col, 4);
    rep.cum4[j] = col.size() >= 4 ? cum4(col) : 0.0;
  }
  rep.holds = rep.m4.maxCoeff() <= rep.bound;
  return rep;
}

}  // namespace heavyica
