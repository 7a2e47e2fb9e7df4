#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "alignkit/assign.hpp"
#include "alignkit/common.hpp"

using alignkit::DataError;
using alignkit::DetRng;
namespace assign = alignkit::assign;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

assign::CostMatrix costs(const std::vector<std::vector<double>>& rows) {
  assign::CostMatrix c = assign::CostMatrix::zeros(static_cast<int>(rows.size()));
  for (int i = 0; i < c.n; ++i)
    for (int j = 0; j < c.n; ++j) c.at(i, j) = rows[i][j];
  return c;
}

// exhaustive oracle
double brute_force_cost(const assign::CostMatrix& c) {
  std::vector<int> perm(c.n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = kInf;
  do {
    double total = 0.0;
    for (int i = 0; i < c.n; ++i) total += c.at(i, perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

bool is_permutation(const std::vector<int>& p) {
  std::vector<bool> seen(p.size(), false);
  for (int v : p) {
    if (v < 0 || v >= static_cast<int>(p.size()) || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

}  // namespace

TEST_CASE("identity on a zero diagonal") {
  auto c = costs({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
  CHECK(assign::solve_lsap(c) == std::vector<int>{0, 1, 2});
}

TEST_CASE("hand-verified 3x3") {
  auto c = costs({{4, 1, 3}, {2, 0, 5}, {3, 2, 2}});
  const auto sol = assign::solve_lsap(c);
  CHECK(sol == std::vector<int>{1, 0, 2});
  CHECK(assign::assignment_cost(c, sol) == doctest::Approx(5.0));
}

TEST_CASE("row shift leaves the argmin unchanged") {
  DetRng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.uniform_int(2, 7);
    assign::CostMatrix c = assign::CostMatrix::zeros(n);
    for (auto& v : c.c) v = rng.uniform_int(0, 20);
    const auto base = assign::solve_lsap(c);
    assign::CostMatrix shifted = c;
    const int row = rng.uniform_int(0, n - 1);
    for (int j = 0; j < n; ++j) shifted.at(row, j) += 7.0;
    const auto again = assign::solve_lsap(shifted);
    CHECK(assign::assignment_cost(c, again) == doctest::Approx(assign::assignment_cost(c, base)));
  }
}

TEST_CASE("exact against brute force, integer costs") {
  DetRng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(1, 7);
    assign::CostMatrix c = assign::CostMatrix::zeros(n);
    for (auto& v : c.c) v = rng.uniform_int(0, 12);  // plenty of ties
    const auto sol = assign::solve_lsap(c);
    CHECK(is_permutation(sol));
    CHECK(assign::assignment_cost(c, sol) == brute_force_cost(c));
  }
}

TEST_CASE("exact against brute force, real costs") {
  DetRng rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.uniform_int(2, 6);
    assign::CostMatrix c = assign::CostMatrix::zeros(n);
    for (auto& v : c.c) v = 10.0 * rng.uniform_real();
    const auto sol = assign::solve_lsap(c);
    CHECK(assign::assignment_cost(c, sol) == doctest::Approx(brute_force_cost(c)).epsilon(1e-9));
  }
}

TEST_CASE("deterministic under ties") {
  auto c = costs({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}});
  const auto first = assign::solve_lsap(c);
  CHECK(is_permutation(first));
  for (int repeat = 0; repeat < 5; ++repeat) CHECK(assign::solve_lsap(c) == first);
}

TEST_CASE("infinity sentinels and infeasibility") {
  auto feasible = costs({{kInf, 1}, {1, kInf}});
  CHECK(assign::solve_lsap(feasible) == std::vector<int>{1, 0});

  CHECK_THROWS_AS(assign::solve_lsap(costs({{kInf, kInf}, {1, 1}})), assign::InfeasibleError);
  // both rows need column 1
  CHECK_THROWS_AS(assign::solve_lsap(costs({{kInf, 1}, {kInf, 1}})), assign::InfeasibleError);
  CHECK_THROWS_AS(assign::solve_lsap(assign::CostMatrix{}), DataError);
}

TEST_CASE("permutation from distribution") {
  // identity rows (after epsilon smoothing)
  std::vector<double> ident{1, 0, 0, 0, 1, 0, 0, 0, 1};
  const auto pm = assign::permutation_from_distribution(ident, 3);
  for (int i = 0; i < 3; ++i) CHECK(pm.at(i, i) == 1);

  // all rows peaked on column 0: the one-to-one constraint still yields a
  // valid permutation, verified against brute force on the log costs
  std::vector<double> peaked;
  for (int i = 0; i < 3; ++i) {
    peaked.push_back(0.98);
    peaked.push_back(0.01);
    peaked.push_back(0.01);
  }
  const auto pm2 = assign::permutation_from_distribution(peaked, 3);
  std::vector<int> sol(3, -1);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (pm2.at(i, j)) sol[i] = j;
  CHECK(is_permutation(sol));
  assign::CostMatrix c = assign::CostMatrix::zeros(3);
  for (int i = 0; i < 9; ++i) c.c[i] = -std::log(peaked[i] + 1e-12);
  CHECK(assign::assignment_cost(c, sol) == doctest::Approx(brute_force_cost(c)));

  // uniform rows: any permutation is optimal but the result is deterministic
  std::vector<double> uniform(16, 0.25);
  const auto pm3 = assign::permutation_from_distribution(uniform, 4);
  const auto pm4 = assign::permutation_from_distribution(uniform, 4);
  CHECK(pm3 == pm4);

  std::vector<double> bad{0.5, 0.2, 0.2, 0.8};  // rows do not sum to 1
  CHECK_THROWS_AS(assign::permutation_from_distribution(bad, 2), DataError);
  std::vector<double> negative{1.2, -0.2, 0.0, 1.0};
  CHECK_THROWS_AS(assign::permutation_from_distribution(negative, 2), DataError);
}
