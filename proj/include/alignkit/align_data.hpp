#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "alignkit/common.hpp"

namespace alignkit::align_data {

// Binary alignment matrix. Rows index target positions (N), columns index
// source positions (M).
class AlignmentMatrix {
 public:
  AlignmentMatrix() = default;
  AlignmentMatrix(int n_rows, int n_cols)
      : rows_(n_rows), cols_(n_cols), a_(static_cast<std::size_t>(n_rows) * n_cols, 0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::uint8_t at(int n, int m) const { return a_[static_cast<std::size_t>(n) * cols_ + m]; }
  void set(int n, int m, std::uint8_t v) { a_[static_cast<std::size_t>(n) * cols_ + m] = v; }

  int row_sum(int n) const;
  int col_sum(int m) const;
  bool has_null_row() const;

  bool operator==(const AlignmentMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && a_ == o.a_;
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<std::uint8_t> a_;
};

// Set of (source, target) index pairs, the carrier for Pharaoh "i-j" text
// where i is the source index and j the target index (0-based).
struct RawAlignment {
  std::vector<std::pair<int, int>> pairs;  // sorted by (source, target), unique
};

struct SentencePair {
  std::vector<std::string> source_tokens;  // length M
  std::vector<std::string> target_tokens;  // length N
  std::vector<int> source_word_map;        // parent word index per source subword
  std::vector<int> target_word_map;        // parent word index per target subword
  std::optional<double> alignment_score;
};

enum class NullFillStrategy { CopyPrevious, SpuriousToken };

struct FilterConfig {
  int max_duplication = 16;
  double score_filter_ratio = 0.05;
  NullFillStrategy null_fill = NullFillStrategy::CopyPrevious;
};

// Thrown for samples that cannot be repaired (e.g. a null row 0 under
// CopyPrevious); callers drop the sample and keep a count.
struct UnprocessableSample : DataError {
  using DataError::DataError;
};

// --- parsing / construction --------------------------------------------------

// Parses whitespace-separated "i-j" tokens. Malformed tokens and out-of-range
// indices raise DataError with the line/column of the offending token.
RawAlignment parse_pharaoh(const std::string& text, int m_len, int n_len);

// Canonical text form: pairs sorted by (source, target), "i-j" joined by spaces.
std::string serialize_pharaoh(const RawAlignment& raw);

AlignmentMatrix to_matrix(const RawAlignment& raw, int m_len, int n_len);
RawAlignment to_pairs(const AlignmentMatrix& a);

// --- word / subword ----------------------------------------------------------

// Word-level reduction: A_ws[n][w] = min(sum over subwords of word w, 1).
// word_map gives the parent word per source subword and must be nondecreasing
// starting at 0.
AlignmentMatrix reduce_to_words(const AlignmentMatrix& a, const std::vector<int>& word_map);

// Expansion back to subword columns: every subword of word w inherits w's row
// support. support(A) is always contained in support(expand(reduce(A))).
AlignmentMatrix expand_to_subwords(const AlignmentMatrix& a_ws, const std::vector<int>& word_map);

// --- null rows ---------------------------------------------------------------

struct NullFillResult {
  AlignmentMatrix matrix;  // one extra source column when a spurious token was added
  bool spurious_added = false;
};

// CopyPrevious: null row n>0 copies the (already repaired) row n-1; a null
// row 0 raises UnprocessableSample. SpuriousToken: a null row whose target
// token continues the previous token's word copies row n-1, any other null
// row aligns to an appended spurious source column.
NullFillResult fill_null_rows(const AlignmentMatrix& a, const SentencePair& pair,
                              NullFillStrategy strategy);

// --- corpus filters ----------------------------------------------------------

struct AlignedSample {
  SentencePair pair;
  AlignmentMatrix matrix;
};

// Keeps samples whose maximum column sum is <= cap.
std::vector<AlignedSample> filter_by_duplication(std::vector<AlignedSample> corpus, int cap);

// Buckets samples by target length and removes the floor(ratio * bucket_size)
// lowest-scoring samples per bucket. Ties keep earlier corpus entries.
std::vector<AlignedSample> filter_by_score(std::vector<AlignedSample> corpus, double ratio);

// Derives a subword-to-word map from a continuation marker. A token carrying
// the marker as suffix ("@@") glues the following token onto the same word.
std::vector<int> word_map_from_marker(const std::vector<std::string>& tokens,
                                      const std::string& marker);

}  // namespace alignkit::align_data
