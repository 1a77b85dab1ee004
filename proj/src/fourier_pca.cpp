#include "heavyica/fourier_pca.hpp"

#include "heavyica/error.hpp"
#include "heavyica/parallel.hpp"
#include "heavyica/random.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace heavyica {

namespace {

constexpr std::size_t kGrain = 8192;

struct Partial {
  double re = 0.0, im = 0.0;
  Eigen::VectorXd g_re, g_im;
  Eigen::MatrixXd h_re, h_im;
};

Eigen::MatrixXd centered_copy(const SampleMatrix& samples) {
  const Eigen::RowVectorXd mean = samples.data.colwise().mean();
  return samples.data.rowwise() - mean;
}

}  // namespace

CharFnEstimate estimate_char_fn(const Eigen::MatrixXd& data, const Eigen::VectorXd& u) {
  const Eigen::Index n = data.cols();
  if (u.size() != n) throw Error(ErrorKind::dimension_mismatch, "probe has wrong dimension");
  const std::size_t N = static_cast<std::size_t>(data.rows());
  if (N == 0) throw Error(ErrorKind::configuration, "no samples");
  std::vector<Partial> parts(chunk_count(N, kGrain));
  parallel_chunks(N, kGrain, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Partial& p = parts[chunk];
    p.g_re.setZero(n);
    p.g_im.setZero(n);
    p.h_re.setZero(n, n);
    p.h_im.setZero(n, n);
    for (std::size_t i = begin; i < end; ++i) {
      const auto x = data.row(static_cast<Eigen::Index>(i)).transpose();
      const double t = u.dot(x);
      const double c = std::cos(t), s = std::sin(t);
      p.re += c;
      p.im += s;
      // i x (c + i s) = x (-s + i c)
      p.g_re.noalias() -= s * x;
      p.g_im.noalias() += c * x;
      // -x x^T (c + i s)
      p.h_re.noalias() -= c * x * x.transpose();
      p.h_im.noalias() -= s * x * x.transpose();
    }
  });
  Partial total;
  total.g_re.setZero(n);
  total.g_im.setZero(n);
  total.h_re.setZero(n, n);
  total.h_im.setZero(n, n);
  for (const auto& p : parts) {
    total.re += p.re;
    total.im += p.im;
    total.g_re += p.g_re;
    total.g_im += p.g_im;
    total.h_re += p.h_re;
    total.h_im += p.h_im;
  }
  const double inv = 1.0 / static_cast<double>(N);
  CharFnEstimate e;
  e.u = u;
  e.phi = {total.re * inv, total.im * inv};
  e.grad = (total.g_re.cast<std::complex<double>>() + std::complex<double>(0, 1) * total.g_im.cast<std::complex<double>>()) * inv;
  e.hess = (total.h_re.cast<std::complex<double>>() + std::complex<double>(0, 1) * total.h_im.cast<std::complex<double>>()) * inv;
  e.hess = (0.5 * (e.hess + e.hess.transpose())).eval();
  e.N_used = N;
  return e;
}

PsiMatrix estimate_psi(const SampleMatrix& samples, const Eigen::VectorXd& u, const PsiOptions& options) {
  samples.validate();
  if (u.size() != samples.dim()) throw Error(ErrorKind::dimension_mismatch, "probe has wrong dimension");
  if (u.norm() > 1.0 + 1e-12) throw Error(ErrorKind::configuration, "probe must satisfy |u| <= 1");
  const CharFnEstimate cf =
      options.center ? estimate_char_fn(centered_copy(samples), u) : estimate_char_fn(samples.data, u);
  if (std::abs(cf.phi) < options.phi_floor) {
    throw Error(ErrorKind::numerical, "probe too large: |phi(u)| = " + std::to_string(std::abs(cf.phi)) +
                                          " below floor");
  }
  const Eigen::MatrixXcd psi = cf.hess / cf.phi - (cf.grad * cf.grad.transpose()) / (cf.phi * cf.phi);
  const Eigen::MatrixXcd sym = 0.5 * (psi + psi.transpose());
  PsiMatrix out;
  out.Psi = sym.real();
  out.max_imag = sym.imag().cwiseAbs().maxCoeff();
  out.u = u;
  out.phi = cf.phi;
  return out;
}

void RecoveryParams::validate() const {
  if (min_probes == 0 || max_probes < min_probes) {
    throw Error(ErrorKind::configuration, "probe counts need 1 <= min_probes <= max_probes");
  }
  if (!(gap_floor >= 0.0)) throw Error(ErrorKind::configuration, "gap floor must be >= 0");
  if (!(psi.phi_floor > 0.0) || psi.phi_floor >= 1.0) {
    throw Error(ErrorKind::configuration, "phi floor must lie in (0, 1)");
  }
}

double relative_eigen_gap(const Eigen::VectorXd& eigenvalues) {
  if (eigenvalues.size() < 2) return 1.0;
  std::vector<double> w(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
  std::sort(w.begin(), w.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < w.size(); ++k) gap = std::min(gap, w[k] - w[k - 1]);
  const double top = eigenvalues.cwiseAbs().maxCoeff();
  return top > 0.0 ? gap / top : 0.0;
}

UnitaryRecovery recover_unitary(const SampleMatrix& samples, const RecoveryParams& params) {
  params.validate();
  samples.validate();
  const Eigen::Index n = samples.dim();
  std::vector<double> norms(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) norms[static_cast<std::size_t>(i)] = samples.data.row(i).norm();
  const auto mid = norms.begin() + static_cast<std::ptrdiff_t>(norms.size() / 2);
  std::nth_element(norms.begin(), mid, norms.end());
  const double sigma = *mid > 0.0 ? 1.0 / (2.0 * *mid) : 1.0;

  UnitaryRecovery best;
  best.gap = -1.0;
  std::normal_distribution<double> normal(0.0, sigma);
  for (std::size_t k = 0; k < params.max_probes; ++k) {
    if (k >= params.min_probes && best.gap >= params.gap_floor) break;
    CounterRng rng(derive_seed(params.seed, "fpca:probe", k));
    Eigen::VectorXd g(n);
    for (Eigen::Index j = 0; j < n; ++j) g[j] = normal(rng);
    const Eigen::VectorXd u = g / std::max(1.0, g.norm());
    ++best.probes_tried;
    PsiMatrix psi;
    try {
      psi = estimate_psi(samples, u, params.psi);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::numerical) throw;
      best.gaps.push_back(0.0);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(psi.Psi);
    if (eig.info() != Eigen::Success) throw Error(ErrorKind::numerical, "eigendecomposition of Psi failed");
    const double gap = relative_eigen_gap(eig.eigenvalues());
    best.gaps.push_back(gap);
    if (gap > best.gap) {
      best.gap = gap;
      best.vectors = eig.eigenvectors();
      best.eigenvalues = eig.eigenvalues();
      best.probe = u;
      best.max_imag = psi.max_imag;
    }
  }
  if (best.gap < params.gap_floor) {
    throw Error(ErrorKind::numerical, "spectral degeneracy: best relative eigen gap " + std::to_string(std::max(0.0, best.gap)) +
                                          " below floor after " + std::to_string(best.probes_tried) + " probes");
  }
  for (Eigen::Index j = 0; j < n; ++j) best.vectors.col(j).normalize();
  return best;
}

double psi_closeness(const SampleMatrix& a, const SampleMatrix& b, const std::vector<Eigen::VectorXd>& probes,
                     const PsiOptions& options) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::dimension_mismatch, "batches differ in dimension");
  double worst = 0.0;
  for (const auto& u : probes) {
    worst = std::max(worst, (estimate_psi(a, u, options).Psi - estimate_psi(b, u, options).Psi).norm());
  }
  return worst;
}

}  // namespace heavyica
