#pragma once

#include <vector>

#include "alignkit/align_data.hpp"
#include "alignkit/common.hpp"

namespace alignkit::assign {

// No finite-cost perfect matching exists.
struct InfeasibleError : NumericError {
  using NumericError::NumericError;
};

// Square cost matrix, row-major. +infinity marks forbidden cells.
struct CostMatrix {
  int n = 0;
  std::vector<double> c;
  double at(int i, int j) const { return c[static_cast<std::size_t>(i) * n + j]; }
  double& at(int i, int j) { return c[static_cast<std::size_t>(i) * n + j]; }
  static CostMatrix zeros(int n) {
    return CostMatrix{n, std::vector<double>(static_cast<std::size_t>(n) * n, 0.0)};
  }
};

// Exact linear sum assignment via shortest augmenting paths (Jonker-Volgenant
// style, O(n^3)). Returns row -> column. Ties during augmentation resolve to
// the lowest column index, so the result is deterministic.
std::vector<int> solve_lsap(const CostMatrix& cost);

double assignment_cost(const CostMatrix& cost, const std::vector<int>& row_to_col);

// Hardens a row-stochastic prediction into a permutation matrix by minimizing
// sum of -log(P_pred + eps) over the assignment.
align_data::AlignmentMatrix permutation_from_distribution(const std::vector<double>& p_pred,
                                                          int n, double eps = 1e-12);

}  // namespace alignkit::assign
