#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "alignkit/common.hpp"
#include "alignkit/decomp.hpp"
#include "alignkit/eval.hpp"
#include "alignkit/synth.hpp"

using namespace alignkit;
namespace ev = alignkit::eval;

namespace {

std::vector<std::vector<std::string>> corpus(std::initializer_list<std::string> lines) {
  std::vector<std::vector<std::string>> out;
  for (const auto& l : lines) out.push_back(split_ws(l));
  return out;
}

// a small trained-free setup: synthetic gold samples + an untrained model
std::vector<pipeline::TrainingSample> gold_samples(neural::Model& model, int n) {
  synth::SynthLanguageSpec spec;
  spec.vocab = model.config().vocab_size - neural::kFirstTokenId;
  const auto sentences = synth::synth_generate(spec, n, 99);
  std::vector<std::vector<std::string>> streams;
  for (const auto& s : sentences) {
    streams.push_back(s.source);
    streams.push_back(s.target);
  }
  // the full alphabet keeps ids stable
  std::vector<std::string> alphabet;
  for (int t = 0; t < spec.vocab; ++t) alphabet.push_back(synth::token_name(t));
  auto vocab = pipeline::Vocab::from_tokens(alphabet);

  std::vector<align_data::AlignedSample> aligned;
  for (const auto& s : sentences) {
    align_data::AlignedSample a;
    a.pair.source_tokens = s.source;
    a.pair.target_tokens = s.target;
    a.matrix = align_data::to_matrix(s.alignment, static_cast<int>(s.source.size()),
                                     static_cast<int>(s.target.size()));
    aligned.push_back(std::move(a));
  }
  return pipeline::prepare_training_samples(aligned, vocab);
}

}  // namespace

TEST_CASE("repetition ratio") {
  CHECK(ev::repetition_ratio(corpus({"a b c"})).repeat_ratio == doctest::Approx(0.0));
  CHECK(ev::repetition_ratio(corpus({"a a b"})).repeat_ratio == doctest::Approx(1.0 / 3));
  CHECK(ev::repetition_ratio(corpus({"a a a"})).repeat_ratio == doctest::Approx(2.0 / 3));

  // invariant under corpus reordering
  const auto r1 = ev::repetition_ratio(corpus({"a a b", "x y", "q q q"}));
  const auto r2 = ev::repetition_ratio(corpus({"q q q", "a a b", "x y"}));
  CHECK(r1.repeat_ratio == doctest::Approx(r2.repeat_ratio));
  CHECK(r1.token_count == 8);

  CHECK_THROWS_AS(ev::repetition_ratio({}), DataError);
  CHECK_THROWS_AS(ev::repetition_ratio({{}, {}}), DataError);

  CHECK(ev::repetition_ratio_ids({{1, 1, 2}}).repeat_ratio == doctest::Approx(1.0 / 3));
}

TEST_CASE("corpus bleu trivial cases") {
  const auto ref = corpus({"the cat sat", "on the mat today"});
  CHECK(ev::corpus_bleu(ref, ref) == doctest::Approx(100.0));
  // symmetric-safe on exact matches
  CHECK(ev::corpus_bleu(ref, ref, 4, false) == doctest::Approx(100.0));

  const auto disjoint = corpus({"aa bb cc", "dd ee ff gg"});
  CHECK(ev::corpus_bleu(disjoint, ref) == doctest::Approx(0.0));

  CHECK_THROWS_AS(ev::corpus_bleu(ref, corpus({"one line"})), DataError);
}

TEST_CASE("corpus bleu against a hand-computed fixture") {
  // Hand-counted n-gram statistics, sentence by sentence:
  //   s1 hyp/ref "the cat sat on the mat" (exact):        1g 6/6, 2g 5/5, 3g 4/4, 4g 3/3
  //   s2 hyp "a quick brown fox jumps"
  //      ref "the quick brown fox jumps high":            1g 4/5, 2g 3/4, 3g 2/3, 4g 1/2
  //   s3 hyp "hello world", ref "hello there world":      1g 2/2, 2g 0/1, 3g -, 4g -
  // corpus precisions: p1=12/13, p2=8/10, p3=6/7, p4=4/5
  // lengths: hyp 13, ref 15 -> BP = exp(1 - 15/13)
  const auto hyp = corpus({"the cat sat on the mat", "a quick brown fox jumps", "hello world"});
  const auto ref =
      corpus({"the cat sat on the mat", "the quick brown fox jumps high", "hello there world"});
  const double manual =
      100.0 * std::exp(1.0 - 15.0 / 13.0) *
      std::exp((std::log(12.0 / 13.0) + std::log(8.0 / 10.0) + std::log(6.0 / 7.0) +
                std::log(4.0 / 5.0)) /
               4.0);
  CHECK(ev::corpus_bleu(hyp, ref) == doctest::Approx(manual).epsilon(1e-12));
  // no zero counts anywhere, so smoothing must not change the value
  CHECK(ev::corpus_bleu(hyp, ref, 4, false) == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("bleu floor smoothing only rescues higher orders") {
  // unigrams match but no 2-gram/3-gram/4-gram matches
  const auto hyp = corpus({"b a d c"});
  const auto ref = corpus({"a b c d"});
  CHECK(ev::corpus_bleu(hyp, ref, 4, false) == doctest::Approx(0.0));
  const double smoothed = ev::corpus_bleu(hyp, ref, 4, true);
  CHECK(smoothed > 0.0);
  // p1=4/4, p2=p3=p4 floored at 0.5/total
  const double manual = 100.0 * std::exp((std::log(1.0) + std::log(0.5 / 3.0) +
                                          std::log(0.5 / 2.0) + std::log(0.5 / 1.0)) /
                                         4.0);
  CHECK(smoothed == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("token accuracy counts length mismatches as errors") {
  CHECK(ev::token_accuracy({{1, 2, 3}}, {{1, 2, 3}}) == doctest::Approx(1.0));
  CHECK(ev::token_accuracy({{1, 2}}, {{1, 2, 3}}) == doctest::Approx(2.0 / 3));
  CHECK(ev::token_accuracy({{1, 2, 9, 9}}, {{1, 2, 3}}) == doctest::Approx(2.0 / 3));
  CHECK(ev::token_accuracy({{4, 2, 3}}, {{1, 2, 3}}) == doctest::Approx(2.0 / 3));
}

TEST_CASE("accuracy counts finalize") {
  ev::AccuracyCounts counts;
  counts.dup_correct = counts.dup_total = 10;
  counts.perm_correct = 5;
  counts.perm_total = 10;
  counts.group_correct = 0;
  counts.group_total = 4;
  const auto acc = counts.finalize();
  CHECK(acc.dup_acc == doctest::Approx(1.0));
  CHECK(acc.perm_acc == doctest::Approx(0.5));
  CHECK(acc.group_acc == doctest::Approx(0.0));

  ev::AccuracyCounts empty;
  CHECK_THROWS_AS(empty.finalize(), DataError);
}

TEST_CASE("aligner accuracy against histogram oracles") {
  neural::ModelConfig cfg;
  cfg.vocab_size = 52;
  cfg.model_dim = 16;
  cfg.hidden_dim = 32;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.attention_heads = 2;
  cfg.dropout_rate = 0.0;
  neural::Model model(cfg);
  auto samples = gold_samples(model, 30);

  // force the duplication head to always answer class 1 and the grouping head
  // to always answer 0; the accuracies must equal the gold label frequencies
  auto& dup_bias = model.params().get("dup.proj.b")->val;
  dup_bias.at(0, 1) = 1000.0;
  auto& grp_bias = model.params().get("grp.proj.b")->val;
  grp_bias.at(0, 0) = 1000.0;

  long long dup_ones = 0, dup_total = 0, group_zeros = 0, group_total = 0;
  for (const auto& s : samples) {
    for (int v : s.da.c) {
      dup_ones += v == 1;
      ++dup_total;
    }
    for (int v : s.da.g) {
      group_zeros += v == 0;
      ++group_total;
    }
  }

  const auto acc = ev::aligner_accuracy(model, samples);
  CHECK(acc.dup_acc == doctest::Approx(static_cast<double>(dup_ones) / dup_total));
  CHECK(acc.group_acc == doctest::Approx(static_cast<double>(group_zeros) / group_total));
  CHECK(acc.perm_acc >= 0.0);
  CHECK(acc.perm_acc <= 1.0);

  CHECK_THROWS_AS(ev::aligner_accuracy(model, {}), DataError);
}
