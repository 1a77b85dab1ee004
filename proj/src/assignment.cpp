#include "heavyica/assignment.hpp"

#include "heavyica/error.hpp"

#include <cmath>
#include <limits>

namespace heavyica {

// Potentials-based shortest augmenting path formulation; rows and columns
// are 1-based inside, with index 0 as the virtual source.
std::vector<std::size_t> min_cost_assignment(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols()) throw Error(ErrorKind::dimension_mismatch, "cost matrix must be square");
  if (!cost.allFinite()) throw Error(ErrorKind::numerical, "cost matrix has non-finite entries");
  const std::size_t n = static_cast<std::size_t>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col(n);
  for (std::size_t j = 1; j <= n; ++j) col[p[j] - 1] = j - 1;
  return col;
}

double assignment_cost(const Eigen::MatrixXd& cost, const std::vector<std::size_t>& assignment) {
  if (static_cast<Eigen::Index>(assignment.size()) != cost.rows()) {
    throw Error(ErrorKind::dimension_mismatch, "assignment size does not match cost matrix");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    total += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(assignment[i]));
  }
  return total;
}

}  // namespace heavyica
