#pragma once

#include <Eigen/Dense>

#include <vector>

namespace heavyica {

/// Minimum-cost perfect matching on a square cost matrix (Hungarian
/// algorithm, O(n^3)). Returns col[i], the column assigned to row i.
std::vector<std::size_t> min_cost_assignment(const Eigen::MatrixXd& cost);

double assignment_cost(const Eigen::MatrixXd& cost, const std::vector<std::size_t>& assignment);

}  // namespace heavyica
