#include "heavyica/centroid_oracle.hpp"

#include "heavyica/error.hpp"
#include "heavyica/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace heavyica {

std::string_view to_string(BodyTag tag) { return tag == BodyTag::centroid ? "centroid" : "polar"; }

void OracleParams::validate(std::size_t n, BodyTag tag) const {
  if (!(eps > 0.0)) throw Error(ErrorKind::configuration, "oracle eps must be > 0");
  if (tag == BodyTag::centroid && eps > static_cast<double>(n * n)) {
    throw Error(ErrorKind::configuration, "centroid oracle requires eps <= n^2");
  }
  if (!(delta > 0.0) || delta >= 1.0) throw Error(ErrorKind::configuration, "oracle delta must lie in (0, 1)");
  if (!(r_inner > 0.0) || r_inner > R_outer) {
    throw Error(ErrorKind::configuration, "oracle radii need 0 < r_inner <= R_outer");
  }
  if (query_budget == 0 || max_iterations == 0) {
    throw Error(ErrorKind::configuration, "oracle query budget and iteration cap must be positive");
  }
}

OracleParams centroid_oracle_params(std::size_t n, double s_m, double s_M, double eps, double delta) {
  OracleParams p;
  const double rn = std::sqrt(static_cast<double>(n));
  p.eps = eps;
  p.delta = delta;
  p.r_inner = s_m / rn;
  p.R_outer = s_M * rn;
  return p;
}

OracleParams polar_oracle_params(std::size_t n, double s_m, double s_M, double eps, double delta) {
  OracleParams p;
  const double rn = std::sqrt(static_cast<double>(n));
  p.eps = eps;
  p.delta = delta;
  p.r_inner = 1.0 / (rn * s_M);
  p.R_outer = rn / s_m;
  return p;
}

MembershipOracle::MembershipOracle(const SampleMatrix& samples, OracleParams params, BodyTag tag)
    : params_(params), tag_(tag) {
  samples.validate();
  params_.validate(static_cast<std::size_t>(samples.dim()), tag);
  const Eigen::Index N = samples.rows();
  const Eigen::Index keep =
      params_.n_freeze == 0 ? N : std::min<Eigen::Index>(N, static_cast<Eigen::Index>(params_.n_freeze));
  if (keep == N) {
    frozen_ = samples.data;
  } else {
    // Seeded subset; rows are i.i.d. so any fixed subset is a fresh sample.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    CounterRng rng(derive_seed(params_.seed, "oracle:freeze"));
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(static_cast<std::size_t>(keep));
    std::sort(order.begin(), order.end());
    frozen_.resize(keep, samples.dim());
    for (Eigen::Index i = 0; i < keep; ++i) frozen_.row(i) = samples.data.row(order[static_cast<std::size_t>(i)]);
  }
  params_.n_freeze = static_cast<std::size_t>(keep);
}

double MembershipOracle::support_point(const Eigen::VectorXd& u, Eigen::VectorXd& point) const {
  const Eigen::Index n = frozen_.cols();
  const Eigen::Index N = frozen_.rows();
  point.setZero(n);
  double h = 0.0;
  const double* row = frozen_.data();
  const double* uu = u.data();
  double* acc = point.data();
  if (n == 2) {
    double a0 = 0.0, a1 = 0.0;
    for (Eigen::Index i = 0; i < N; ++i, row += 2) {
      const double p = row[0] * uu[0] + row[1] * uu[1];
      const double sg = static_cast<double>((p > 0.0) - (p < 0.0));
      a0 += sg * row[0];
      a1 += sg * row[1];
      h += sg * p;
    }
    acc[0] = a0;
    acc[1] = a1;
  } else {
    for (Eigen::Index i = 0; i < N; ++i, row += n) {
      double p = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) p += row[j] * uu[j];
      if (p > 0.0) {
        for (Eigen::Index j = 0; j < n; ++j) acc[j] += row[j];
        h += p;
      } else if (p < 0.0) {
        for (Eigen::Index j = 0; j < n; ++j) acc[j] -= row[j];
        h -= p;
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(N);
  point *= inv;
  evaluations_.fetch_add(1, std::memory_order_relaxed);
  return h * inv;
}

double MembershipOracle::support(const Eigen::VectorXd& u) const {
  if (u.size() != dim()) throw Error(ErrorKind::dimension_mismatch, "direction has wrong dimension");
  Eigen::VectorXd point;
  return support_point(u, point);
}

Eigen::VectorXd MembershipOracle::subgradient(const Eigen::VectorXd& u, const Eigen::VectorXd& y) const {
  if (u.size() != dim() || y.size() != dim()) throw Error(ErrorKind::dimension_mismatch, "wrong dimension");
  Eigen::VectorXd point;
  support_point(u, point);
  return point - y;
}

OracleStats MembershipOracle::stats() const {
  return {queries_.load(), evaluations_.load(), exhausted_.load()};
}

MembershipDecision MembershipOracle::query(const Eigen::VectorXd& y) const {
  if (y.size() != dim()) throw Error(ErrorKind::dimension_mismatch, "query point has wrong dimension");
  queries_.fetch_add(1, std::memory_order_relaxed);
  return tag_ == BodyTag::centroid ? centroid_query(y) : polar_query(y);
}

MembershipDecision MembershipOracle::polar_query(const Eigen::VectorXd& y) const {
  MembershipDecision d;
  const double norm = y.norm();
  if (norm == 0.0) {
    d.margin = params_.r_inner;
    return d;
  }
  Eigen::VectorXd point;
  const double h = support_point(y / norm, point);
  d.queries_used = 1;
  const double radial = h > 0.0 ? 1.0 / h : std::numeric_limits<double>::infinity();
  d.margin = radial - norm;
  if (norm <= radial) return d;
  d.verdict = Verdict::infeasible;
  // The polar body lies in the halfspace <p, y/|y|> <= radial only along
  // the ray; the ray itself is the certificate.
  d.witness = y / norm;
  d.witness_offset = std::numeric_limits<double>::infinity();
  return d;
}

// Minimizes f(u) = H(u) - <y, u> over the unit ball through its dual: the
// distance from y to the empirical centroid body. The body is the zonotope
// of the frozen samples; its vertices are reached through the support
// oracle at u = (y - z)/|y - z|, which is exactly a subgradient evaluation
// of f. Wolfe's min-norm-point iteration keeps a small corral of such
// vertices (plus the origin) and projects y onto their hull. Certificates:
//   |y - z| <= tau for z in the body        -> min f >= -tau, feasible;
//   f(u) < -tau for a unit u                -> y violates <., u> <= H(u) + tau.
// With tau = eps / 2 both answers are correct outside the eps shell.
MembershipDecision MembershipOracle::centroid_query(const Eigen::VectorXd& y) const {
  MembershipDecision d;
  const double tau = 0.5 * params_.eps;
  const Eigen::Index n = dim();
  if (y.isZero(0.0)) {
    d.margin = tau;
    return d;
  }
  // Corral points are stored shifted by -y, so the target is the origin.
  std::vector<Eigen::VectorXd> atoms{-y};
  std::vector<double> weights{1.0};
  Eigen::VectorXd x = -y;
  Eigen::VectorXd s(n);
  const double scale2 = y.squaredNorm() + params_.R_outer * params_.R_outer;

  for (std::size_t it = 0; it < params_.max_iterations; ++it) {
    const double dist = x.norm();
    if (dist <= tau) {
      d.margin = tau - dist;
      return d;
    }
    const Eigen::VectorXd u = -x / dist;
    const double h = support_point(u, s);
    ++d.queries_used;
    const double f = h - y.dot(u);
    if (f < -tau) {
      d.verdict = Verdict::infeasible;
      d.margin = f + tau;
      d.witness = u;
      d.witness_offset = h + tau;
      return d;
    }
    Eigen::VectorXd q = s - y;
    // No descent left: x is the projection onto the body.
    if (x.squaredNorm() - x.dot(q) <= 1e-12 * scale2) break;
    atoms.push_back(std::move(q));
    weights.push_back(0.0);

    for (int minor = 0; minor < 64; ++minor) {
      const std::size_t m = atoms.size();
      Eigen::MatrixXd system = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m + 1), static_cast<Eigen::Index>(m + 1));
      for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a; b < m; ++b) {
          const double g = atoms[a].dot(atoms[b]);
          system(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = g;
          system(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = g;
        }
        system(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(m)) = 1.0;
        system(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(a)) = 1.0;
      }
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m + 1));
      rhs[static_cast<Eigen::Index>(m)] = 1.0;
      const Eigen::VectorXd sol = system.completeOrthogonalDecomposition().solve(rhs);
      bool interior = true;
      for (std::size_t a = 0; a < m; ++a) interior = interior && sol[static_cast<Eigen::Index>(a)] > 1e-12;
      if (interior) {
        for (std::size_t a = 0; a < m; ++a) weights[a] = sol[static_cast<Eigen::Index>(a)];
        break;
      }
      // Walk from the current weights toward the affine minimizer until a
      // weight hits zero, then drop the exhausted atoms.
      double theta = 1.0;
      for (std::size_t a = 0; a < m; ++a) {
        const double alpha = sol[static_cast<Eigen::Index>(a)];
        if (alpha <= 1e-12 && weights[a] - alpha > 0.0) theta = std::min(theta, weights[a] / (weights[a] - alpha));
      }
      std::vector<Eigen::VectorXd> kept;
      std::vector<double> kept_w;
      for (std::size_t a = 0; a < m; ++a) {
        const double w = weights[a] + theta * (sol[static_cast<Eigen::Index>(a)] - weights[a]);
        if (w > 1e-12) {
          kept.push_back(std::move(atoms[a]));
          kept_w.push_back(w);
        }
      }
      atoms = std::move(kept);
      weights = std::move(kept_w);
      if (atoms.size() == 1) {
        weights[0] = 1.0;
        break;
      }
    }
    double total = 0.0;
    for (double w : weights) total += w;
    x.setZero();
    for (std::size_t a = 0; a < atoms.size(); ++a) x += (weights[a] / total) * atoms[a];
  }
  d.budget_exhausted = true;
  d.margin = tau - x.norm();
  exhausted_.fetch_add(1, std::memory_order_relaxed);
  return d;
}

MembershipDecision polar_membership(const MembershipOracle& oracle, const Eigen::VectorXd& y) {
  if (oracle.tag() != BodyTag::polar) throw Error(ErrorKind::configuration, "oracle is not a polar-body oracle");
  return oracle.query(y);
}

MembershipDecision centroid_membership(const MembershipOracle& oracle, const Eigen::VectorXd& y) {
  if (oracle.tag() != BodyTag::centroid) {
    throw Error(ErrorKind::configuration, "oracle is not a centroid-body oracle");
  }
  return oracle.query(y);
}

namespace {

// Largest t allowed by a separating halfspace <p, w> <= c along x + t d.
double halfspace_limit(const MembershipDecision& q, const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
  if (q.witness.size() == 0 || !std::isfinite(q.witness_offset)) return std::numeric_limits<double>::infinity();
  const double slope = q.witness.dot(d);
  if (!(slope > 0.0)) return std::numeric_limits<double>::infinity();
  return (q.witness_offset - q.witness.dot(x)) / slope;
}

}  // namespace

double boundary_along_line(const ConvexBodyOracle& body, const Eigen::VectorXd& x, const Eigen::VectorXd& d,
                           double tol) {
  const double dn = d.norm();
  if (!(dn > 0.0)) throw Error(ErrorKind::configuration, "line direction must be nonzero");
  if (!(tol > 0.0)) throw Error(ErrorKind::configuration, "boundary tolerance must be > 0");
  double lo = 0.0;
  double hi = (x.norm() + body.outer_radius() + 2.0 * body.shell()) / dn;
  auto tighten = [&](const MembershipDecision& q) { hi = std::max(lo, std::min(hi, halfspace_limit(q, x, d))); };

  MembershipDecision q = body.query(x + hi * d);
  for (int expand = 0; q.feasible(); ++expand) {
    if (expand == 40) throw Error(ErrorKind::convergence, "body looks unbounded along the search line");
    lo = hi;
    hi *= 2.0;
    q = body.query(x + hi * d);
  }
  tighten(q);

  // Alternate a probe just inside the best halfspace cut with plain
  // bisection, so the bracket at least halves every two queries.
  bool probe = true;
  for (int iter = 0; (hi - lo) * dn > tol; ++iter) {
    if (iter > 200) throw Error(ErrorKind::convergence, "boundary search did not converge");
    const double t = probe ? std::max(lo, hi - 0.5 * tol / dn) : 0.5 * (lo + hi);
    probe = !probe;
    q = body.query(x + t * d);
    if (q.feasible()) {
      lo = t;
    } else {
      hi = t;
      tighten(q);
    }
  }
  return lo;
}

double gauge(const ConvexBodyOracle& body, const Eigen::VectorXd& y, double tol) {
  if (y.size() != body.dim()) throw Error(ErrorKind::dimension_mismatch, "gauge query has wrong dimension");
  if (y.isZero(0.0)) throw Error(ErrorKind::configuration, "gauge of the zero vector");
  if (tol <= 0.0) tol = body.shell() / 8.0;
  const double s = boundary_along_line(body, Eigen::VectorXd::Zero(y.size()), y, tol);
  if (!(s > 0.0)) throw Error(ErrorKind::convergence, "gauge search collapsed to the origin");
  return 1.0 / s;
}

}  // namespace heavyica
