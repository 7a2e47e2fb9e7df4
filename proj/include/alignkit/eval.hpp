#pragma once

#include <string>
#include <vector>

#include "alignkit/model.hpp"
#include "alignkit/pipeline.hpp"

namespace alignkit::eval {

struct AlignerAccuracy {
  double dup_acc = 0.0;
  double perm_acc = 0.0;
  double group_acc = 0.0;
};

// Which upstream inputs are teacher-forced while measuring each head, i.e.
// the permutation head sees states duplicated with gold counts and the
// grouping head additionally sees states in gold permuted order.
struct AccuracyOptions {
  bool gold_dup_for_perm = true;
  bool gold_dup_perm_for_group = true;
};

// Per-position accuracies over a corpus with gold decomposed alignments:
// duplication counts by argmax class, permutation rows by the hardened LSAP
// assignment, grouping labels by argmax.
AlignerAccuracy aligner_accuracy(neural::Model& model,
                                 const std::vector<pipeline::TrainingSample>& corpus,
                                 const AccuracyOptions& opts = {});

// Metric-level pieces, exposed so the aggregation can be tested against
// injected predictions.
struct AccuracyCounts {
  long long dup_correct = 0, dup_total = 0;
  long long perm_correct = 0, perm_total = 0;
  long long group_correct = 0, group_total = 0;
  AlignerAccuracy finalize() const;
};

struct RepetitionReport {
  double repeat_ratio = 0.0;
  long long token_count = 0;
};

// Fraction of tokens equal to their immediate predecessor, over the corpus.
RepetitionReport repetition_ratio(const std::vector<std::vector<std::string>>& corpus);
RepetitionReport repetition_ratio_ids(const std::vector<std::vector<int>>& corpus);

// Corpus BLEU-4 in [0, 100] with brevity penalty. With floor smoothing, an
// order n >= 2 with zero matches counts 0.5 instead; a zero unigram match
// always scores 0. Orders longer than every hypothesis are skipped.
double corpus_bleu(const std::vector<std::vector<std::string>>& hypotheses,
                   const std::vector<std::vector<std::string>>& references, int max_ngram = 4,
                   bool floor_smoothing = true);

// Position-wise accuracy: matches over min(len) positions, denominator is the
// total reference length, so length mismatches count as errors.
double token_accuracy(const std::vector<std::vector<int>>& hypotheses,
                      const std::vector<std::vector<int>>& references);

}  // namespace alignkit::eval
