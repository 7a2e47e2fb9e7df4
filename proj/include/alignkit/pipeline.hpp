#pragma once

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "alignkit/align_data.hpp"
#include "alignkit/checkpoint.hpp"
#include "alignkit/decomp.hpp"
#include "alignkit/model.hpp"

namespace alignkit::pipeline {

// --- vocabulary ----------------------------------------------------------------

// Shared source/target vocabulary. Ids 0 and 1 are BOS/EOS; corpus tokens
// start at neural::kFirstTokenId in first-appearance order.
class Vocab {
 public:
  int id_of(const std::string& token) const;
  const std::string& token_of(int id) const;
  int size() const { return static_cast<int>(tokens_.size()) + neural::kFirstTokenId; }

  static Vocab build(const std::vector<std::vector<std::string>>& streams);
  static Vocab from_tokens(const std::vector<std::string>& tokens);
  const std::vector<std::string>& raw_tokens() const { return tokens_; }
  bool contains(const std::string& token) const { return by_token_.count(token) > 0; }
  void extend(const std::vector<std::vector<std::string>>& streams);
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> by_token_;
};

// --- training data ---------------------------------------------------------

struct TrainingSample {
  std::vector<int> src_ids, tgt_ids;
  decomp::DecomposedAlignment da;       // gold factorization
  decomp::AlignedInputWeights weights;  // row-normalized gold alignment
};

std::vector<TrainingSample> prepare_training_samples(
    const std::vector<align_data::AlignedSample>& corpus, const Vocab& vocab);

// --- training ----------------------------------------------------------------

struct TrainConfig {
  long long steps = 4000;
  int batch_size = 16;
  std::uint64_t seed = 1;
  int log_every = 100;
  neural::AdamConfig adam;
};

struct LossReport {
  double total = 0, translation = 0, duplication = 0, permutation = 0, grouping = 0;
};

class Trainer {
 public:
  Trainer(neural::Model& model, std::vector<TrainingSample> data, TrainConfig cfg);

  // One optimizer step over the next batch (teacher-forced alignment for the
  // alignart arch). Throws NumericError on a non-finite loss.
  LossReport train_step();

  long long step() const { return optimizer_.step_count(); }
  neural::Adam& optimizer() { return optimizer_; }

 private:
  const TrainingSample& next_sample();

  neural::Model& model_;
  std::vector<TrainingSample> data_;
  TrainConfig cfg_;
  neural::Adam optimizer_;
  DetRng shuffle_rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

// --- inference ---------------------------------------------------------------

enum class Ablation { None, Duplication, Permutation, Grouping };

struct TranslationResult {
  std::vector<int> tokens;
  align_data::AlignmentMatrix alignment;  // binary, no null rows
  double dup_logprob = 0.0;
  double group_logprob = 0.0;
  double translation_logprob = 0.0;
};

TranslationResult translate(neural::Model& model, const std::vector<int>& src,
                            Ablation ablate = Ablation::None);

// Decode with a supplied alignment matrix instead of the Aligner's estimate.
TranslationResult oracle_translate(neural::Model& model, const std::vector<int>& src,
                                   const align_data::AlignmentMatrix& gold);

// Plain NAT baseline: monotonic copy decoder inputs at a given target length.
std::vector<int> translate_nat(neural::Model& model, const std::vector<int>& src, int n_len);

// --- re-scoring ----------------------------------------------------------------

struct RescoreConfig {
  int m_prime = 4;
  int l_prime = 4;
  int a = 4;
  int b = 2;
  void validate() const;
};

// Candidate count vectors ranked by joint log-probability (nonincreasing).
// The argmax prediction is always the first candidate.
std::vector<std::vector<int>> duplication_candidates(const neural::Tensor& dup_logits,
                                                     int m_prime, int a);

// Candidate grouping label vectors; position 0 is never toggled.
std::vector<std::vector<int>> grouping_candidates(const neural::Tensor& group_logits,
                                                  int l_prime, int b);

using SequenceScorer =
    std::function<double(const std::vector<int>& src, const std::vector<int>& candidate)>;

struct RescoreResult {
  TranslationResult best;
  int candidates_decoded = 0;
  double best_score = 0.0;
  double single_score = 0.0;  // scorer value of the argmax-path translation
};

RescoreResult rescore_translate(neural::Model& model, const std::vector<int>& src,
                                const RescoreConfig& cfg, const SequenceScorer& scorer);

// Teacher-model scorer over checkpointed ART weights.
SequenceScorer teacher_scorer(neural::Model& teacher);

}  // namespace alignkit::pipeline
