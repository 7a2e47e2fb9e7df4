#include "alignkit/align_data.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace alignkit::align_data {

int AlignmentMatrix::row_sum(int n) const {
  int s = 0;
  for (int m = 0; m < cols_; ++m) s += at(n, m);
  return s;
}

int AlignmentMatrix::col_sum(int m) const {
  int s = 0;
  for (int n = 0; n < rows_; ++n) s += at(n, m);
  return s;
}

bool AlignmentMatrix::has_null_row() const {
  for (int n = 0; n < rows_; ++n)
    if (row_sum(n) == 0) return true;
  return false;
}

namespace {

[[noreturn]] void parse_fail(const std::string& what, int line, int col) {
  throw DataError("pharaoh parse error at line " + std::to_string(line) + ", column " +
                  std::to_string(col) + ": " + what);
}

}  // namespace

RawAlignment parse_pharaoh(const std::string& text, int m_len, int n_len) {
  std::set<std::pair<int, int>> seen;
  int line = 1, col = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    char ch = text[i];
    if (ch == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (ch == ' ' || ch == '\t' || ch == '\r') {
      ++col;
      ++i;
      continue;
    }
    // token start
    const int tok_line = line, tok_col = col;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ' && text[j] != '\t' && text[j] != '\n' &&
           text[j] != '\r')
      ++j;
    const std::string tok = text.substr(i, j - i);
    col += static_cast<int>(j - i);
    i = j;

    const std::size_t dash = tok.find('-');
    if (dash == std::string::npos || dash == 0 || dash + 1 == tok.size())
      parse_fail("expected \"i-j\", got \"" + tok + "\"", tok_line, tok_col);
    int src = 0, tgt = 0;
    for (std::size_t k = 0; k < dash; ++k) {
      if (tok[k] < '0' || tok[k] > '9')
        parse_fail("non-digit in source index of \"" + tok + "\"", tok_line, tok_col);
      src = src * 10 + (tok[k] - '0');
      if (src > 1'000'000) parse_fail("source index overflow", tok_line, tok_col);
    }
    for (std::size_t k = dash + 1; k < tok.size(); ++k) {
      if (tok[k] < '0' || tok[k] > '9')
        parse_fail("non-digit in target index of \"" + tok + "\"", tok_line, tok_col);
      tgt = tgt * 10 + (tok[k] - '0');
      if (tgt > 1'000'000) parse_fail("target index overflow", tok_line, tok_col);
    }
    if (src >= m_len)
      parse_fail("source index " + std::to_string(src) + " out of range for M=" +
                     std::to_string(m_len),
                 tok_line, tok_col);
    if (tgt >= n_len)
      parse_fail("target index " + std::to_string(tgt) + " out of range for N=" +
                     std::to_string(n_len),
                 tok_line, tok_col);
    seen.emplace(src, tgt);
  }
  RawAlignment raw;
  raw.pairs.assign(seen.begin(), seen.end());
  return raw;
}

std::string serialize_pharaoh(const RawAlignment& raw) {
  auto pairs = raw.pairs;
  std::sort(pairs.begin(), pairs.end());
  std::string out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(pairs[i].first) + "-" + std::to_string(pairs[i].second);
  }
  return out;
}

AlignmentMatrix to_matrix(const RawAlignment& raw, int m_len, int n_len) {
  AlignmentMatrix a(n_len, m_len);
  for (const auto& [src, tgt] : raw.pairs) {
    if (src < 0 || src >= m_len || tgt < 0 || tgt >= n_len)
      throw DataError("alignment pair out of range");
    a.set(tgt, src, 1);
  }
  return a;
}

RawAlignment to_pairs(const AlignmentMatrix& a) {
  RawAlignment raw;
  for (int m = 0; m < a.cols(); ++m)
    for (int n = 0; n < a.rows(); ++n)
      if (a.at(n, m)) raw.pairs.emplace_back(m, n);
  std::sort(raw.pairs.begin(), raw.pairs.end());
  return raw;
}

namespace {

void check_word_map(const std::vector<int>& word_map, int m_len) {
  if (static_cast<int>(word_map.size()) != m_len)
    throw DataError("word map length does not match source length");
  int prev = 0;
  for (std::size_t i = 0; i < word_map.size(); ++i) {
    const int w = word_map[i];
    if (i == 0 && w != 0) throw DataError("word map must start at word 0");
    if (w < prev || w > prev + 1) throw DataError("word map must be nondecreasing without gaps");
    prev = w;
  }
}

}  // namespace

AlignmentMatrix reduce_to_words(const AlignmentMatrix& a, const std::vector<int>& word_map) {
  check_word_map(word_map, a.cols());
  const int n_words = word_map.empty() ? 0 : word_map.back() + 1;
  AlignmentMatrix ws(a.rows(), n_words);
  for (int n = 0; n < a.rows(); ++n)
    for (int m = 0; m < a.cols(); ++m)
      if (a.at(n, m)) ws.set(n, word_map[m], 1);  // clip of the summed products
  return ws;
}

AlignmentMatrix expand_to_subwords(const AlignmentMatrix& a_ws, const std::vector<int>& word_map) {
  const int n_words = word_map.empty() ? 0 : word_map.back() + 1;
  if (n_words != a_ws.cols()) throw DataError("word map does not match word-level matrix width");
  check_word_map(word_map, static_cast<int>(word_map.size()));
  AlignmentMatrix a(a_ws.rows(), static_cast<int>(word_map.size()));
  for (int n = 0; n < a.rows(); ++n)
    for (int m = 0; m < a.cols(); ++m)
      if (a_ws.at(n, word_map[m])) a.set(n, m, 1);
  return a;
}

NullFillResult fill_null_rows(const AlignmentMatrix& a, const SentencePair& pair,
                              NullFillStrategy strategy) {
  const int n_len = a.rows(), m_len = a.cols();
  std::vector<bool> null_row(n_len);
  bool any_null = false;
  for (int n = 0; n < n_len; ++n) {
    null_row[n] = a.row_sum(n) == 0;
    any_null = any_null || null_row[n];
  }
  if (!any_null) return {a, false};

  const auto& twm = pair.target_word_map;
  auto same_word_as_prev = [&](int n) {
    if (n == 0) return false;
    if (static_cast<int>(twm.size()) != n_len) return false;  // no word info: distinct words
    return twm[n] == twm[n - 1];
  };

  if (strategy == NullFillStrategy::CopyPrevious) {
    AlignmentMatrix out = a;
    for (int n = 0; n < n_len; ++n) {
      if (!null_row[n]) continue;
      if (n == 0)
        throw UnprocessableSample("null row 0 cannot copy a previous alignment");
      for (int m = 0; m < m_len; ++m) out.set(n, m, out.at(n - 1, m));
    }
    return {out, false};
  }

  // SpuriousToken: decide per null row whether it copies the previous row
  // (same target word) or attaches to the spurious column. The column is only
  // appended when some row actually uses it.
  std::vector<bool> uses_spurious(n_len, false);
  for (int n = 0; n < n_len; ++n)
    if (null_row[n] && !same_word_as_prev(n)) uses_spurious[n] = true;
  bool spurious = false;
  for (int n = 0; n < n_len; ++n) spurious = spurious || uses_spurious[n];

  AlignmentMatrix out(n_len, m_len + (spurious ? 1 : 0));
  for (int n = 0; n < n_len; ++n) {
    if (!null_row[n]) {
      for (int m = 0; m < m_len; ++m) out.set(n, m, a.at(n, m));
    } else if (uses_spurious[n]) {
      out.set(n, m_len, 1);
    } else {
      for (int m = 0; m < out.cols(); ++m) out.set(n, m, out.at(n - 1, m));
    }
  }
  return {out, spurious};
}

std::vector<AlignedSample> filter_by_duplication(std::vector<AlignedSample> corpus, int cap) {
  if (cap < 1) throw DataError("duplication cap must be >= 1");
  std::vector<AlignedSample> kept;
  kept.reserve(corpus.size());
  for (auto& s : corpus) {
    int max_dup = 0;
    for (int m = 0; m < s.matrix.cols(); ++m) max_dup = std::max(max_dup, s.matrix.col_sum(m));
    if (max_dup <= cap) kept.push_back(std::move(s));
  }
  return kept;
}

std::vector<AlignedSample> filter_by_score(std::vector<AlignedSample> corpus, double ratio) {
  if (ratio == 0.0) return corpus;
  if (ratio < 0.0 || ratio >= 1.0) throw DataError("score filter ratio must be in [0, 1)");
  for (const auto& s : corpus)
    if (!s.pair.alignment_score)
      throw DataError("score filtering requires an alignment score on every sample");

  // bucket indices by target length
  std::map<int, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    buckets[static_cast<int>(corpus[i].pair.target_tokens.size())].push_back(i);

  std::vector<bool> drop(corpus.size(), false);
  for (auto& [len, idx] : buckets) {
    const std::size_t k = static_cast<std::size_t>(ratio * static_cast<double>(idx.size()));
    if (k == 0) continue;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return *corpus[a].pair.alignment_score < *corpus[b].pair.alignment_score;
    });
    for (std::size_t i = 0; i < k; ++i) drop[idx[i]] = true;
  }

  std::vector<AlignedSample> kept;
  kept.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (!drop[i]) kept.push_back(std::move(corpus[i]));
  return kept;
}

std::vector<int> word_map_from_marker(const std::vector<std::string>& tokens,
                                      const std::string& marker) {
  std::vector<int> map(tokens.size());
  int word = 0;
  bool continuing = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!continuing && i > 0) ++word;
    map[i] = word;
    continuing = !marker.empty() && tokens[i].size() > marker.size() &&
                 tokens[i].compare(tokens[i].size() - marker.size(), marker.size(), marker) == 0;
  }
  return map;
}

}  // namespace alignkit::align_data
