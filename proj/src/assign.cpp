#include "alignkit/assign.hpp"

#include <cmath>
#include <limits>

namespace alignkit::assign {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::vector<int> solve_lsap(const CostMatrix& cost) {
  const int n = cost.n;
  if (n <= 0) throw DataError("empty cost matrix");
  for (int i = 0; i < n; ++i) {
    bool finite = false;
    for (int j = 0; j < n && !finite; ++j) {
      const double v = cost.at(i, j);
      if (std::isnan(v)) throw DataError("NaN in cost matrix");
      finite = v < kInf;
    }
    if (!finite) throw InfeasibleError("cost matrix row " + std::to_string(i) +
                                       " has no finite entry");
  }

  // 1-based potentials/links; column 0 is the virtual start of each path.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {  // strict: ties keep the lowest column index
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 < 0 || delta == kInf)
        throw InfeasibleError("no finite-cost perfect matching exists");
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (match[j] > 0) row_to_col[match[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i) {
    if (row_to_col[i] < 0 || cost.at(i, row_to_col[i]) == kInf)
      throw InfeasibleError("assignment contains a forbidden cell");
  }
  return row_to_col;
}

double assignment_cost(const CostMatrix& cost, const std::vector<int>& row_to_col) {
  double total = 0.0;
  for (int i = 0; i < cost.n; ++i) total += cost.at(i, row_to_col[i]);
  return total;
}

align_data::AlignmentMatrix permutation_from_distribution(const std::vector<double>& p_pred,
                                                          int n, double eps) {
  if (static_cast<int>(p_pred.size()) != n * n) throw DataError("distribution shape mismatch");
  CostMatrix cost = CostMatrix::zeros(n);
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double p = p_pred[static_cast<std::size_t>(i) * n + j];
      if (p < 0.0) throw DataError("negative probability in permutation distribution");
      row_sum += p;
      cost.at(i, j) = -std::log(p + eps);
    }
    if (std::abs(row_sum - 1.0) > 1e-4)
      throw DataError("permutation distribution row " + std::to_string(i) +
                      " does not sum to 1");
  }
  const auto row_to_col = solve_lsap(cost);
  align_data::AlignmentMatrix p(n, n);
  for (int i = 0; i < n; ++i) p.set(i, row_to_col[i], 1);
  return p;
}

}  // namespace alignkit::assign
