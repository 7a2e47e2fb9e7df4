#pragma once

#include <vector>

#include "alignkit/align_data.hpp"

namespace alignkit::decomp {

using align_data::AlignmentMatrix;

// Exact factorization A = G * P * D of a binary alignment matrix.
//
//   D (L x M) copies source position m into c[m] consecutive slots,
//   P (L x L) permutes the duplicated slots into target-side order,
//   G (N x L) merges consecutive permuted slots into target positions.
//
// The slot indexing is canonical: the j-th copy of column m is the j-th
// nonzero of that column scanned by increasing target index, and the k-th
// member of row n is the k-th nonzero of that row scanned by increasing
// source index. Each nonzero (n, m) of A therefore pins exactly one entry of
// P, which makes P unique without tie-breaking.
struct DecomposedAlignment {
  std::vector<int> c;     // column sums of A, length M
  std::vector<int> r;     // row sums of A, length N
  int L = 0;              // sum(c) == sum(r)
  std::vector<int> perm;  // perm[t] = s  <=>  P[t][s] = 1
  std::vector<int> g;     // grouping labels, length L, g[0] = 0

  AlignmentMatrix duplication() const;  // banded L x M
  AlignmentMatrix permutation() const;  // L x L
  AlignmentMatrix grouping() const;     // banded N x L
};

DecomposedAlignment decompose(const AlignmentMatrix& a);

// Boolean matrix product G * P * D. For triples produced by decompose the
// boolean and integer products coincide and the result equals A exactly.
AlignmentMatrix recompose(const AlignmentMatrix& grouping, const AlignmentMatrix& permutation,
                          const AlignmentMatrix& duplication);
AlignmentMatrix recompose(const DecomposedAlignment& d);

// g[l] = 1 iff column l of a banded grouping matrix equals column l-1.
std::vector<int> group_labels(const AlignmentMatrix& grouping);

// Inverse of group_labels: one group per zero label.
AlignmentMatrix labels_to_grouping(const std::vector<int>& g);

// Banded duplication matrix for a count vector; all-zero columns are allowed.
AlignmentMatrix duplication_to_matrix(const std::vector<int>& c);

// Row-stochastic weights W[n][m] = A[n][m] / r_n used to average encoder
// states into aligned decoder inputs.
struct AlignedInputWeights {
  int rows = 0, cols = 0;
  std::vector<double> w;  // row-major
  double at(int n, int m) const { return w[static_cast<std::size_t>(n) * cols + m]; }
};

AlignedInputWeights aligned_input_weights(const AlignmentMatrix& a);

}  // namespace alignkit::decomp
