#include "alignkit/decomp.hpp"

#include <numeric>

namespace alignkit::decomp {

AlignmentMatrix DecomposedAlignment::duplication() const { return duplication_to_matrix(c); }

AlignmentMatrix DecomposedAlignment::permutation() const {
  AlignmentMatrix p(L, L);
  for (int t = 0; t < L; ++t) p.set(t, perm[t], 1);
  return p;
}

AlignmentMatrix DecomposedAlignment::grouping() const {
  AlignmentMatrix gm(static_cast<int>(r.size()), L);
  int l = 0;
  for (std::size_t n = 0; n < r.size(); ++n)
    for (int k = 0; k < r[n]; ++k) gm.set(static_cast<int>(n), l++, 1);
  return gm;
}

DecomposedAlignment decompose(const AlignmentMatrix& a) {
  const int n_len = a.rows(), m_len = a.cols();
  DecomposedAlignment d;
  d.c.assign(m_len, 0);
  d.r.assign(n_len, 0);
  for (int n = 0; n < n_len; ++n) {
    for (int m = 0; m < m_len; ++m) {
      const std::uint8_t v = a.at(n, m);
      if (v > 1) throw DataError("alignment matrix must be binary");
      d.c[m] += v;
      d.r[n] += v;
    }
    if (d.r[n] == 0)
      throw DataError("cannot decompose a matrix with a null row (fill null rows first)");
  }
  d.L = std::accumulate(d.c.begin(), d.c.end(), 0);

  // slot offsets: copies of column m start at col_base[m], members of row n
  // start at row_base[n]
  std::vector<int> col_base(m_len, 0), row_base(n_len, 0);
  for (int m = 1; m < m_len; ++m) col_base[m] = col_base[m - 1] + d.c[m - 1];
  for (int n = 1; n < n_len; ++n) row_base[n] = row_base[n - 1] + d.r[n - 1];

  d.perm.assign(d.L, -1);
  std::vector<int> col_seen(m_len, 0), row_seen(n_len, 0);
  for (int n = 0; n < n_len; ++n) {
    for (int m = 0; m < m_len; ++m) {
      if (!a.at(n, m)) continue;
      const int s = col_base[m] + col_seen[m]++;  // h' slot of this copy
      const int t = row_base[n] + row_seen[n]++;  // d' slot of this member
      d.perm[t] = s;
    }
  }

  d.g.assign(d.L, 0);
  {
    int l = 0;
    for (int n = 0; n < n_len; ++n)
      for (int k = 0; k < d.r[n]; ++k, ++l) d.g[l] = k > 0 ? 1 : 0;
  }
  return d;
}

AlignmentMatrix recompose(const AlignmentMatrix& grouping, const AlignmentMatrix& permutation,
                          const AlignmentMatrix& duplication) {
  const int l_len = permutation.rows();
  if (permutation.cols() != l_len || grouping.cols() != l_len || duplication.rows() != l_len)
    throw DataError("recompose: inconsistent shapes");
  AlignmentMatrix a(grouping.rows(), duplication.cols());
  // P*D first: row t of the product is row perm(t) of D
  std::vector<int> perm_of(l_len, -1);
  for (int t = 0; t < l_len; ++t)
    for (int s = 0; s < l_len; ++s)
      if (permutation.at(t, s)) perm_of[t] = s;
  for (int n = 0; n < a.rows(); ++n)
    for (int l = 0; l < l_len; ++l)
      if (grouping.at(n, l) && perm_of[l] >= 0)
        for (int m = 0; m < a.cols(); ++m)
          if (duplication.at(perm_of[l], m)) a.set(n, m, 1);
  return a;
}

AlignmentMatrix recompose(const DecomposedAlignment& d) {
  return recompose(d.grouping(), d.permutation(), d.duplication());
}

std::vector<int> group_labels(const AlignmentMatrix& grouping) {
  const int l_len = grouping.cols();
  std::vector<int> g(l_len, 0);
  for (int l = 1; l < l_len; ++l) {
    bool equal = true;
    for (int n = 0; n < grouping.rows() && equal; ++n)
      equal = grouping.at(n, l) == grouping.at(n, l - 1);
    g[l] = equal ? 1 : 0;
  }
  return g;
}

AlignmentMatrix labels_to_grouping(const std::vector<int>& g) {
  if (g.empty()) throw DataError("empty grouping label vector");
  if (g[0] != 0) throw DataError("grouping label 0 must be 0");
  int n_groups = 0;
  for (int v : g) {
    if (v != 0 && v != 1) throw DataError("grouping labels must be binary");
    if (v == 0) ++n_groups;
  }
  AlignmentMatrix gm(n_groups, static_cast<int>(g.size()));
  int n = -1;
  for (std::size_t l = 0; l < g.size(); ++l) {
    if (g[l] == 0) ++n;
    gm.set(n, static_cast<int>(l), 1);
  }
  return gm;
}

AlignmentMatrix duplication_to_matrix(const std::vector<int>& c) {
  int total = 0;
  for (int v : c) {
    if (v < 0) throw DataError("duplication counts must be nonnegative");
    total += v;
  }
  if (total == 0) throw DataError("duplication counts sum to zero");
  AlignmentMatrix dm(total, static_cast<int>(c.size()));
  int l = 0;
  for (std::size_t m = 0; m < c.size(); ++m)
    for (int j = 0; j < c[m]; ++j) dm.set(l++, static_cast<int>(m), 1);
  return dm;
}

AlignedInputWeights aligned_input_weights(const AlignmentMatrix& a) {
  AlignedInputWeights w;
  w.rows = a.rows();
  w.cols = a.cols();
  w.w.assign(static_cast<std::size_t>(w.rows) * w.cols, 0.0);
  for (int n = 0; n < a.rows(); ++n) {
    const int rn = a.row_sum(n);
    if (rn == 0) throw DataError("aligned input weights require a matrix with no null rows");
    for (int m = 0; m < a.cols(); ++m)
      if (a.at(n, m)) w.w[static_cast<std::size_t>(n) * w.cols + m] = 1.0 / rn;
  }
  return w;
}

}  // namespace alignkit::decomp
