#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "alignkit/align_data.hpp"
#include "alignkit/common.hpp"
#include "alignkit/decomp.hpp"
#include "alignkit/synth.hpp"

using namespace alignkit;
namespace sy = alignkit::synth;

TEST_CASE("copy task yields an identity corpus") {
  const auto spec = sy::SynthLanguageSpec::copy_task(12);
  const auto corpus = sy::synth_generate(spec, 50, 5);
  for (const auto& s : corpus) {
    CHECK(s.target == s.source);
    for (std::size_t i = 0; i < s.source.size(); ++i) {
      CHECK(s.alignment.pairs[i].first == static_cast<int>(i));
      CHECK(s.alignment.pairs[i].second == static_cast<int>(i));
    }
  }
}

TEST_CASE("generation is a pure function of spec and seed") {
  const sy::SynthLanguageSpec spec;
  const auto a = sy::synth_generate(spec, 40, 123);
  const auto b = sy::synth_generate(spec, 40, 123);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].source == b[i].source);
    CHECK(a[i].target == b[i].target);
    CHECK(a[i].alignment.pairs == b[i].alignment.pairs);
  }
  const auto c = sy::synth_generate(spec, 40, 124);
  bool any_differ = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    any_differ = any_differ || a[i].source != c[i].source;
  CHECK(any_differ);
}

TEST_CASE("gold alignments pass the decompose/recompose round trip") {
  const sy::SynthLanguageSpec spec;
  for (const auto& s : sy::synth_generate(spec, 60, 9)) {
    const auto a = align_data::to_matrix(s.alignment, static_cast<int>(s.source.size()),
                                         static_cast<int>(s.target.size()));
    CHECK_FALSE(a.has_null_row());
    const auto d = decomp::decompose(a);
    CHECK(decomp::recompose(d) == a);
  }
}

TEST_CASE("default language exercises every mapping type") {
  const sy::SynthLanguageSpec spec;
  const auto corpus = sy::synth_generate(spec, 200, 21);
  bool zero_fertility = false, one_to_many = false, many_to_one = false, reordered = false;
  for (const auto& s : corpus) {
    const auto a = align_data::to_matrix(s.alignment, static_cast<int>(s.source.size()),
                                         static_cast<int>(s.target.size()));
    const auto d = decomp::decompose(a);
    for (int v : d.c) {
      zero_fertility = zero_fertility || v == 0;
      one_to_many = one_to_many || v >= 2;
    }
    for (int v : d.r) many_to_one = many_to_one || v >= 2;
    for (std::size_t t = 0; t < d.perm.size(); ++t)
      reordered = reordered || d.perm[t] != static_cast<int>(t);
  }
  CHECK(zero_fertility);
  CHECK(one_to_many);
  CHECK(many_to_one);
  CHECK(reordered);
}

TEST_CASE("gold targets avoid adjacent repetition") {
  const sy::SynthLanguageSpec spec;
  long long repeats = 0, total = 0;
  for (const auto& s : sy::synth_generate(spec, 300, 33)) {
    total += static_cast<long long>(s.target.size());
    for (std::size_t i = 1; i < s.target.size(); ++i)
      repeats += s.target[i] == s.target[i - 1];
  }
  // the redraw budget keeps residual adjacent repeats essentially at zero
  CHECK(static_cast<double>(repeats) / total < 0.001);
}

TEST_CASE("grouping can be disabled") {
  sy::SynthLanguageSpec spec;
  spec.grouping = false;
  for (const auto& s : sy::synth_generate(spec, 50, 3)) {
    const auto a = align_data::to_matrix(s.alignment, static_cast<int>(s.source.size()),
                                         static_cast<int>(s.target.size()));
    for (int n = 0; n < a.rows(); ++n) CHECK(a.row_sum(n) == 1);
  }
}

TEST_CASE("spec json round trip and validation") {
  sy::SynthLanguageSpec spec;
  spec.vocab = 30;
  spec.fertility.assign(30, 2);
  spec.rotate_window = 5;
  const auto round = sy::SynthLanguageSpec::from_json(spec.to_json());
  CHECK(round.vocab == 30);
  CHECK(round.fertility == spec.fertility);
  CHECK(round.rotate_window == 5);

  sy::SynthLanguageSpec bad;
  bad.fertility.assign(7, 1);  // wrong table size
  CHECK_THROWS_AS(bad.validate(), DataError);
  sy::SynthLanguageSpec bad2;
  bad2.tt1_mul = 10;  // shares a factor with vocab 50
  CHECK_THROWS_AS(bad2.validate(), DataError);
}
