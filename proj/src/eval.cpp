#include "alignkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "alignkit/assign.hpp"

namespace alignkit::eval {

using neural::Tensor;
using neural::Var;

AlignerAccuracy AccuracyCounts::finalize() const {
  if (dup_total == 0 || perm_total == 0 || group_total == 0)
    throw DataError("accuracy requires at least one position per head");
  AlignerAccuracy acc;
  acc.dup_acc = static_cast<double>(dup_correct) / dup_total;
  acc.perm_acc = static_cast<double>(perm_correct) / perm_total;
  acc.group_acc = static_cast<double>(group_correct) / group_total;
  return acc;
}

namespace {

int argmax_row(const Tensor& t, int row) {
  int best = 0;
  for (int c = 1; c < t.cols; ++c)
    if (t.at(row, c) > t.at(row, best)) best = c;
  return best;
}

}  // namespace

AlignerAccuracy aligner_accuracy(neural::Model& model,
                                 const std::vector<pipeline::TrainingSample>& corpus,
                                 const AccuracyOptions& opts) {
  if (corpus.empty()) throw DataError("accuracy evaluation needs a corpus with gold alignments");
  neural::NoGradGuard ng;
  AccuracyCounts counts;
  for (const auto& s : corpus) {
    Var h = model.encode(s.src_ids, false);

    Var dup_logits = model.predict_duplication(h, false);
    std::vector<int> c_pred(s.src_ids.size());
    for (std::size_t m = 0; m < s.src_ids.size(); ++m) {
      c_pred[m] = argmax_row(dup_logits->val, static_cast<int>(m));
      counts.dup_correct += c_pred[m] == s.da.c[m];
    }
    counts.dup_total += static_cast<long long>(s.src_ids.size());

    const std::vector<int>& c_in = opts.gold_dup_for_perm ? s.da.c : c_pred;
    bool c_usable = true;
    int l_in = 0;
    for (int v : c_in) {
      l_in += v;
      c_usable = c_usable && v <= model.config().max_duplication_class;
    }
    // rows are only comparable to gold at the gold L; with predicted counts,
    // a length mismatch scores every row of the sample as wrong
    if (!c_usable || l_in == 0 || l_in != s.da.L) {
      counts.perm_total += s.da.L;
      counts.group_total += s.da.L;
      continue;
    }

    Var h_dup = model.duplicate_states(h, c_in, false);
    auto pp = model.predict_permutation(h_dup, false);
    std::vector<int> sigma(pp.L);
    if (pp.L == 1) {
      sigma[0] = 0;
    } else {
      auto pm = assign::permutation_from_distribution(pp.p_pred.v, pp.L);
      for (int t = 0; t < pp.L; ++t)
        for (int s2 = 0; s2 < pp.L; ++s2)
          if (pm.at(t, s2)) sigma[t] = s2;
    }
    for (int t = 0; t < pp.L; ++t) counts.perm_correct += sigma[t] == s.da.perm[t];
    counts.perm_total += pp.L;

    const std::vector<int>& sigma_in = opts.gold_dup_perm_for_group ? s.da.perm : sigma;
    Var d_perm = model.apply_permutation(h_dup, sigma_in);
    Var grp_logits = model.predict_grouping(d_perm, false);
    for (int l = 0; l < pp.L; ++l) {
      const int pred = l == 0 ? 0 : argmax_row(grp_logits->val, l);
      counts.group_correct += pred == s.da.g[l];
    }
    counts.group_total += pp.L;
  }
  return counts.finalize();
}

namespace {

template <typename T>
RepetitionReport repetition_impl(const std::vector<std::vector<T>>& corpus) {
  if (corpus.empty()) throw DataError("repetition ratio of an empty corpus");
  long long repeats = 0, total = 0;
  for (const auto& sent : corpus) {
    total += static_cast<long long>(sent.size());
    for (std::size_t i = 1; i < sent.size(); ++i) repeats += sent[i] == sent[i - 1];
  }
  if (total == 0) throw DataError("repetition ratio of a corpus with no tokens");
  RepetitionReport rep;
  rep.token_count = total;
  rep.repeat_ratio = static_cast<double>(repeats) / static_cast<double>(total);
  return rep;
}

}  // namespace

RepetitionReport repetition_ratio(const std::vector<std::vector<std::string>>& corpus) {
  return repetition_impl(corpus);
}

RepetitionReport repetition_ratio_ids(const std::vector<std::vector<int>>& corpus) {
  return repetition_impl(corpus);
}

double corpus_bleu(const std::vector<std::vector<std::string>>& hypotheses,
                   const std::vector<std::vector<std::string>>& references, int max_ngram,
                   bool floor_smoothing) {
  if (hypotheses.size() != references.size())
    throw DataError("hypothesis/reference corpus size mismatch");
  if (hypotheses.empty()) throw DataError("empty corpus");
  if (max_ngram < 1) throw DataError("max_ngram must be >= 1");

  std::vector<long long> matched(max_ngram, 0), total(max_ngram, 0);
  long long hyp_len = 0, ref_len = 0;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& hyp = hypotheses[s];
    const auto& ref = references[s];
    hyp_len += static_cast<long long>(hyp.size());
    ref_len += static_cast<long long>(ref.size());
    for (int n = 1; n <= max_ngram; ++n) {
      std::map<std::vector<std::string>, long long> ref_counts;
      for (int i = 0; i + n <= static_cast<int>(ref.size()); ++i)
        ++ref_counts[std::vector<std::string>(ref.begin() + i, ref.begin() + i + n)];
      std::map<std::vector<std::string>, long long> hyp_counts;
      for (int i = 0; i + n <= static_cast<int>(hyp.size()); ++i)
        ++hyp_counts[std::vector<std::string>(hyp.begin() + i, hyp.begin() + i + n)];
      for (const auto& [gram, count] : hyp_counts) {
        total[n - 1] += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matched[n - 1] += std::min(count, it->second);
      }
    }
  }

  if (hyp_len == 0) return 0.0;
  double log_prec_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= max_ngram; ++n) {
    if (total[n - 1] == 0) continue;  // no hypothesis long enough for this order
    ++orders;
    double num = static_cast<double>(matched[n - 1]);
    if (matched[n - 1] == 0) {
      if (n == 1 || !floor_smoothing) return 0.0;
      num = 0.5;
    }
    log_prec_sum += std::log(num / static_cast<double>(total[n - 1]));
  }
  if (orders == 0) return 0.0;
  const double bp =
      hyp_len >= ref_len ? 1.0
                         : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return 100.0 * bp * std::exp(log_prec_sum / orders);
}

double token_accuracy(const std::vector<std::vector<int>>& hypotheses,
                      const std::vector<std::vector<int>>& references) {
  if (hypotheses.size() != references.size()) throw DataError("corpus size mismatch");
  long long correct = 0, total = 0;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    total += static_cast<long long>(references[s].size());
    const std::size_t lim = std::min(hypotheses[s].size(), references[s].size());
    for (std::size_t i = 0; i < lim; ++i) correct += hypotheses[s][i] == references[s][i];
  }
  if (total == 0) throw DataError("empty reference corpus");
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace alignkit::eval
