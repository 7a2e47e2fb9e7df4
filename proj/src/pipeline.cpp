#include "alignkit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "alignkit/assign.hpp"

namespace alignkit::pipeline {

using align_data::AlignmentMatrix;
using neural::Model;
using neural::Tensor;
using neural::Var;

// --- Vocab ---------------------------------------------------------------------

int Vocab::id_of(const std::string& token) const {
  auto it = by_token_.find(token);
  if (it == by_token_.end()) throw DataError("token not in vocabulary: " + token);
  return it->second;
}

const std::string& Vocab::token_of(int id) const {
  static const std::string bos = "<bos>", eos = "<eos>";
  if (id == neural::kBosId) return bos;
  if (id == neural::kEosId) return eos;
  const int i = id - neural::kFirstTokenId;
  if (i < 0 || i >= static_cast<int>(tokens_.size()))
    throw DataError("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(i)];
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& streams) {
  Vocab v;
  v.extend(streams);
  return v;
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
  Vocab v;
  v.extend({tokens});
  return v;
}

void Vocab::extend(const std::vector<std::vector<std::string>>& streams) {
  for (const auto& stream : streams)
    for (const auto& tok : stream)
      if (!by_token_.count(tok)) {
        by_token_[tok] = static_cast<int>(tokens_.size()) + neural::kFirstTokenId;
        tokens_.push_back(tok);
      }
}

void Vocab::save(const std::string& path) const { write_lines(path, tokens_); }

Vocab Vocab::load(const std::string& path) {
  Vocab v;
  for (auto& line : read_lines(path)) {
    if (line.empty()) continue;
    v.by_token_[line] = static_cast<int>(v.tokens_.size()) + neural::kFirstTokenId;
    v.tokens_.push_back(line);
  }
  return v;
}

// --- training data ---------------------------------------------------------

std::vector<TrainingSample> prepare_training_samples(
    const std::vector<align_data::AlignedSample>& corpus, const Vocab& vocab) {
  std::vector<TrainingSample> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) {
    TrainingSample t;
    for (const auto& tok : s.pair.source_tokens) t.src_ids.push_back(vocab.id_of(tok));
    for (const auto& tok : s.pair.target_tokens) t.tgt_ids.push_back(vocab.id_of(tok));
    if (static_cast<int>(t.src_ids.size()) != s.matrix.cols() ||
        static_cast<int>(t.tgt_ids.size()) != s.matrix.rows())
      throw DataError("alignment matrix does not match sentence lengths");
    t.da = decomp::decompose(s.matrix);
    t.weights = decomp::aligned_input_weights(s.matrix);
    out.push_back(std::move(t));
  }
  return out;
}

// --- Trainer -------------------------------------------------------------------

Trainer::Trainer(Model& model, std::vector<TrainingSample> data, TrainConfig cfg)
    : model_(model),
      data_(std::move(data)),
      cfg_(cfg),
      optimizer_(model.params(), cfg.adam),
      shuffle_rng_(cfg.seed) {
  if (data_.empty()) throw DataError("empty training corpus");
  order_.resize(data_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  shuffle_rng_.shuffle(order_);
  model_.set_dropout_seed(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
}

const TrainingSample& Trainer::next_sample() {
  if (cursor_ >= order_.size()) {
    shuffle_rng_.shuffle(order_);
    cursor_ = 0;
  }
  return data_[order_[cursor_++]];
}

LossReport Trainer::train_step() {
  const std::string& arch = model_.config().arch;
  LossReport report;
  const int batch = cfg_.batch_size;
  for (int b = 0; b < batch; ++b) {
    const TrainingSample& s = next_sample();
    Var total, lt, ld, lp, lg;
    if (arch == "alignart") {
      Var h = model_.encode(s.src_ids, true);
      Var dup_logits = model_.predict_duplication(h, true);
      ld = model_.loss_duplication(dup_logits, s.da.c);
      Var h_dup = model_.duplicate_states(h, s.da.c, true);
      auto pp = model_.predict_permutation(h_dup, true);
      lp = model_.loss_permutation(pp, s.da.perm);
      Var d_perm = model_.apply_permutation(h_dup, s.da.perm);
      Var grp_logits = model_.predict_grouping(d_perm, true);
      lg = model_.loss_grouping(grp_logits, s.da.g);
      Var d = model_.aligned_inputs(h, s.weights);
      Var logits = model_.decode(d, h, true);
      lt = model_.loss_translation(logits, s.tgt_ids);
      total = model_.total_loss(lt, ld, lp, lg);
    } else if (arch == "nat") {
      Var h = model_.encode(s.src_ids, true);
      Var d = model_.monotonic_inputs(h, static_cast<int>(s.tgt_ids.size()));
      Var logits = model_.decode(d, h, true);
      lt = model_.loss_translation(logits, s.tgt_ids);
      total = lt;
    } else {  // art
      Var h = model_.encode(s.src_ids, true);
      Var logits = model_.ar_logits(h, s.tgt_ids, true);
      std::vector<int> targets = s.tgt_ids;
      targets.push_back(neural::kEosId);
      lt = model_.loss_translation(logits, targets);
      total = lt;
    }

    const double value = total->val.at(0, 0);
    if (!std::isfinite(value))
      throw NumericError("non-finite loss at optimizer step " +
                         std::to_string(optimizer_.step_count() + 1) + ", batch element " +
                         std::to_string(b));
    neural::backward(total);
    report.total += value / batch;
    report.translation += lt->val.at(0, 0) / batch;
    if (ld) report.duplication += ld->val.at(0, 0) / batch;
    if (lp) report.permutation += lp->val.at(0, 0) / batch;
    if (lg) report.grouping += lg->val.at(0, 0) / batch;
  }
  optimizer_.step(model_.params(), 1.0 / batch);
  return report;
}

// --- inference helpers -------------------------------------------------------

namespace {

std::vector<double> softmax_row(const Tensor& logits, int row) {
  const int k = logits.cols;
  std::vector<double> p(k);
  double mx = logits.at(row, 0);
  for (int c = 1; c < k; ++c) mx = std::max(mx, logits.at(row, c));
  double sum = 0.0;
  for (int c = 0; c < k; ++c) {
    p[c] = std::exp(logits.at(row, c) - mx);
    sum += p[c];
  }
  for (auto& x : p) x /= sum;
  return p;
}

int argmax_row(const Tensor& logits, int row) {
  int best = 0;
  for (int c = 1; c < logits.cols; ++c)
    if (logits.at(row, c) > logits.at(row, best)) best = c;
  return best;
}

// argmax counts with the all-zero fallback: when every position predicts
// class 0, the position with the most confident prediction is forced to 1.
std::vector<int> counts_from_logits(const Tensor& dup_logits) {
  const int m_len = dup_logits.rows;
  std::vector<int> c(m_len);
  bool all_zero = true;
  for (int m = 0; m < m_len; ++m) {
    c[m] = argmax_row(dup_logits, m);
    all_zero = all_zero && c[m] == 0;
  }
  if (all_zero) {
    int best_m = 0;
    double best_p = -1.0;
    for (int m = 0; m < m_len; ++m) {
      const double p = softmax_row(dup_logits, m)[c[m]];
      if (p > best_p) {
        best_p = p;
        best_m = m;
      }
    }
    c[best_m] = 1;
  }
  return c;
}

double joint_logprob(const Tensor& logits, const std::vector<int>& classes) {
  double total = 0.0;
  for (int r = 0; r < logits.rows; ++r) {
    const auto p = softmax_row(logits, r);
    total += std::log(std::max(p[classes[r]], 1e-300));
  }
  return total;
}

std::vector<int> permutation_for(const neural::PermPrediction& pp, Ablation ablate) {
  std::vector<int> sigma(pp.L);
  if (ablate == Ablation::Permutation || pp.L == 1) {
    for (int i = 0; i < pp.L; ++i) sigma[i] = i;
    return sigma;
  }
  AlignmentMatrix pm = assign::permutation_from_distribution(pp.p_pred.v, pp.L);
  for (int t = 0; t < pp.L; ++t)
    for (int s = 0; s < pp.L; ++s)
      if (pm.at(t, s)) sigma[t] = s;
  return sigma;
}

std::vector<int> labels_from_logits(const Tensor& grp_logits) {
  std::vector<int> g(grp_logits.rows);
  for (int l = 0; l < grp_logits.rows; ++l) g[l] = argmax_row(grp_logits, l);
  g[0] = 0;
  return g;
}

TranslationResult decode_with_alignment(Model& model, const Var& h,
                                        const AlignmentMatrix& alignment) {
  TranslationResult res;
  res.alignment = alignment;
  const auto w = decomp::aligned_input_weights(alignment);
  Var d = model.aligned_inputs(h, w);
  Var logits = model.decode(d, h, false);
  Var lp = neural::log_softmax_rows(logits);
  for (int n = 0; n < logits->val.rows; ++n) {
    const int y = argmax_row(logits->val, n);
    res.tokens.push_back(y);
    res.translation_logprob += lp->val.at(n, y);
  }
  return res;
}

}  // namespace

TranslationResult translate(Model& model, const std::vector<int>& src, Ablation ablate) {
  if (model.config().arch != "alignart")
    throw DataError("translate requires an alignart checkpoint");
  neural::NoGradGuard ng;
  Var h = model.encode(src, false);

  Var dup_logits = model.predict_duplication(h, false);
  std::vector<int> c;
  if (ablate == Ablation::Duplication)
    c.assign(src.size(), 1);
  else
    c = counts_from_logits(dup_logits->val);

  Var h_dup = model.duplicate_states(h, c, false);
  auto pp = model.predict_permutation(h_dup, false);
  const std::vector<int> sigma = permutation_for(pp, ablate);
  Var d_perm = model.apply_permutation(h_dup, sigma);

  Var grp_logits = model.predict_grouping(d_perm, false);
  std::vector<int> g;
  if (ablate == Ablation::Grouping)
    g.assign(sigma.size(), 0);
  else
    g = labels_from_logits(grp_logits->val);

  AlignmentMatrix d_hat = decomp::duplication_to_matrix(c);
  AlignmentMatrix p_hat(static_cast<int>(sigma.size()), static_cast<int>(sigma.size()));
  for (std::size_t t = 0; t < sigma.size(); ++t) p_hat.set(static_cast<int>(t), sigma[t], 1);
  AlignmentMatrix g_hat = decomp::labels_to_grouping(g);
  AlignmentMatrix a_hat = decomp::recompose(g_hat, p_hat, d_hat);

  TranslationResult res = decode_with_alignment(model, h, a_hat);
  res.dup_logprob = joint_logprob(dup_logits->val, c);
  res.group_logprob = joint_logprob(grp_logits->val, g);
  return res;
}

TranslationResult oracle_translate(Model& model, const std::vector<int>& src,
                                   const AlignmentMatrix& gold) {
  if (gold.cols() != static_cast<int>(src.size()))
    throw DataError("gold alignment does not match source length");
  if (gold.has_null_row()) throw DataError("gold alignment has a null row");
  neural::NoGradGuard ng;
  Var h = model.encode(src, false);
  return decode_with_alignment(model, h, gold);
}

std::vector<int> translate_nat(Model& model, const std::vector<int>& src, int n_len) {
  neural::NoGradGuard ng;
  Var h = model.encode(src, false);
  Var d = model.monotonic_inputs(h, n_len);
  Var logits = model.decode(d, h, false);
  std::vector<int> out(n_len);
  for (int n = 0; n < n_len; ++n) out[n] = argmax_row(logits->val, n);
  return out;
}

// --- candidates ----------------------------------------------------------------

void RescoreConfig::validate() const {
  if (m_prime < 0 || l_prime < 0 || a < 1 || b < 1)
    throw DataError("invalid re-scoring configuration");
  if (m_prime < 31 && a > (1 << m_prime))
    throw DataError("rescore: a exceeds the 2^m' candidate pool");
  if (l_prime < 31 && b > (1 << l_prime))
    throw DataError("rescore: b exceeds the 2^l' candidate pool");
}

namespace {

struct Toggle {
  int position;
  int top1, top2;
};

// Shared pool machinery: toggle the chosen low-confidence positions between
// their top-1 and top-2 classes, rank the pool by joint log-probability.
std::vector<std::vector<int>> toggled_candidates(const Tensor& logits,
                                                 const std::vector<int>& base,
                                                 const std::vector<int>& eligible, int n_toggle,
                                                 int keep) {
  std::vector<std::pair<double, int>> confidence;  // (max prob, position)
  for (int pos : eligible) {
    const auto p = softmax_row(logits, pos);
    confidence.emplace_back(p[base[pos]], pos);
  }
  std::stable_sort(confidence.begin(), confidence.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  const int k = std::min<int>(n_toggle, static_cast<int>(confidence.size()));

  std::vector<Toggle> toggles;
  for (int i = 0; i < k; ++i) {
    const int pos = confidence[i].second;
    const auto p = softmax_row(logits, pos);
    int top1 = 0, top2 = -1;
    for (int c = 1; c < logits.cols; ++c)
      if (p[c] > p[top1]) top1 = c;
    for (int c = 0; c < logits.cols; ++c) {
      if (c == top1) continue;
      if (top2 < 0 || p[c] > p[top2]) top2 = c;
    }
    toggles.push_back({pos, top1, top2});
  }

  std::vector<std::pair<double, std::vector<int>>> pool;
  const int pool_size = 1 << k;
  for (int combo = 0; combo < pool_size; ++combo) {
    std::vector<int> cand = base;
    for (int i = 0; i < k; ++i)
      cand[toggles[i].position] = (combo >> i) & 1 ? toggles[i].top2 : toggles[i].top1;
    pool.emplace_back(joint_logprob(logits, cand), std::move(cand));
  }
  // nonincreasing joint probability; combo 0 (the argmax prediction) wins ties
  std::stable_sort(pool.begin(), pool.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });

  std::vector<std::vector<int>> out;
  std::set<std::vector<int>> seen;
  for (auto& [lp, cand] : pool) {
    if (static_cast<int>(out.size()) >= keep) break;
    if (seen.insert(cand).second) out.push_back(std::move(cand));
  }
  return out;
}

}  // namespace

std::vector<std::vector<int>> duplication_candidates(const Tensor& dup_logits, int m_prime,
                                                     int a) {
  const std::vector<int> base = counts_from_logits(dup_logits);
  std::vector<int> eligible(dup_logits.rows);
  for (int m = 0; m < dup_logits.rows; ++m) eligible[m] = m;
  auto cands = toggled_candidates(dup_logits, base, eligible, m_prime, a);
  // repair any all-zero count vectors the toggles may have produced, then
  // re-rank: a repaired candidate swaps one top-1 class for a forced 1
  std::vector<std::vector<int>> repaired;
  std::set<std::vector<int>> seen;
  for (auto& c : cands) {
    bool all_zero = true;
    for (int v : c) all_zero = all_zero && v == 0;
    if (all_zero) {
      int best_m = 0;
      double best_p = -1.0;
      for (int m = 0; m < dup_logits.rows; ++m) {
        const double p = softmax_row(dup_logits, m)[0];
        if (p > best_p) {
          best_p = p;
          best_m = m;
        }
      }
      c[best_m] = 1;
    }
    if (seen.insert(c).second) repaired.push_back(std::move(c));
  }
  std::stable_sort(repaired.begin(), repaired.end(),
                   [&](const std::vector<int>& x, const std::vector<int>& y) {
                     return joint_logprob(dup_logits, x) > joint_logprob(dup_logits, y);
                   });
  return repaired;
}

std::vector<std::vector<int>> grouping_candidates(const Tensor& group_logits, int l_prime,
                                                  int b) {
  std::vector<int> base = labels_from_logits(group_logits);
  std::vector<int> eligible;  // position 0 is pinned to label 0
  for (int l = 1; l < group_logits.rows; ++l) eligible.push_back(l);
  if (eligible.empty()) return {base};
  return toggled_candidates(group_logits, base, eligible, l_prime, b);
}

// --- re-scoring ------------------------------------------------------------

SequenceScorer teacher_scorer(Model& teacher) {
  if (teacher.config().arch != "art")
    throw DataError("teacher scorer requires an art checkpoint");
  // Candidates differ in length, so the score is the per-token log-probability
  // (EOS included); an unnormalized sum would rank shorter candidates above
  // better ones whenever the teacher is not fully converged.
  return [&teacher](const std::vector<int>& src, const std::vector<int>& cand) {
    return teacher.ar_sequence_logprob(src, cand) / static_cast<double>(cand.size() + 1);
  };
}

RescoreResult rescore_translate(Model& model, const std::vector<int>& src,
                                const RescoreConfig& cfg, const SequenceScorer& scorer) {
  cfg.validate();
  neural::NoGradGuard ng;
  Var h = model.encode(src, false);
  Var dup_logits = model.predict_duplication(h, false);
  const auto dup_cands = duplication_candidates(dup_logits->val, cfg.m_prime, cfg.a);

  struct Candidate {
    std::vector<int> c, sigma, g;
    double dup_lp = 0, grp_lp = 0;
  };
  std::vector<Candidate> all;
  std::set<std::tuple<std::vector<int>, std::vector<int>, std::vector<int>>> seen;
  for (const auto& c : dup_cands) {
    Var h_dup = model.duplicate_states(h, c, false);
    auto pp = model.predict_permutation(h_dup, false);
    const auto sigma = permutation_for(pp, Ablation::None);
    Var d_perm = model.apply_permutation(h_dup, sigma);
    Var grp_logits = model.predict_grouping(d_perm, false);
    for (const auto& g : grouping_candidates(grp_logits->val, cfg.l_prime, cfg.b)) {
      if (!seen.insert({c, sigma, g}).second) continue;
      Candidate cand;
      cand.c = c;
      cand.sigma = sigma;
      cand.g = g;
      cand.dup_lp = joint_logprob(dup_logits->val, c);
      cand.grp_lp = joint_logprob(grp_logits->val, g);
      all.push_back(std::move(cand));
    }
  }

  RescoreResult result;
  result.candidates_decoded = static_cast<int>(all.size());
  bool have_best = false;
  for (std::size_t idx = 0; idx < all.size(); ++idx) {
    const auto& cand = all[idx];
    AlignmentMatrix d_hat = decomp::duplication_to_matrix(cand.c);
    AlignmentMatrix p_hat(static_cast<int>(cand.sigma.size()),
                          static_cast<int>(cand.sigma.size()));
    for (std::size_t t = 0; t < cand.sigma.size(); ++t)
      p_hat.set(static_cast<int>(t), cand.sigma[t], 1);
    AlignmentMatrix g_hat = decomp::labels_to_grouping(cand.g);
    AlignmentMatrix a_hat = decomp::recompose(g_hat, p_hat, d_hat);
    TranslationResult tr = decode_with_alignment(model, h, a_hat);
    tr.dup_logprob = cand.dup_lp;
    tr.group_logprob = cand.grp_lp;

    double score;
    try {
      score = scorer(src, tr.tokens);
    } catch (const std::exception&) {
      // scorer failure: fall back to the single-candidate translation
      RescoreResult fallback;
      fallback.best = translate(model, src);
      fallback.candidates_decoded = 1;
      return fallback;
    }
    if (idx == 0) result.single_score = score;  // argmax path ranks first in both pools
    if (!have_best || score > result.best_score) {
      have_best = true;
      result.best_score = score;
      result.best = std::move(tr);
    }
  }
  return result;
}

}  // namespace alignkit::pipeline
