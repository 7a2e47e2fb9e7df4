#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alignkit/align_data.hpp"

namespace alignkit::synth {

// Deterministic toy translation language. The seed only randomizes the source
// sentence; target, alignment and every Aligner sub-task are pure functions of
// the source, so each factor is fully predictable:
//
//   duplication: token w_s expands to fertility[s] target-side slots,
//   permutation: copies are interleaved by copy index, then each window of
//                rotate_window slots rotates left by rotate_shift,
//   grouping:    an adjacent slot pair from distinct source positions merges
//                into one target token when the left token id is a connector
//                (id % 5 == 0).
//
// A singleton slot of token s emits (tt1_mul*s + tt1_add) % vocab; a merged
// pair emits (tt2_mul*(s1+s2) + tt2_add) % vocab. Sentences whose gold target
// contains two equal adjacent tokens are re-drawn so gold repetition stays at
// zero.
struct SynthLanguageSpec {
  int vocab = 50;
  int min_words = 4;
  int max_words = 10;
  std::vector<int> fertility;  // per token id; empty = default s % 4 (0..3)
  bool interleave_copies = true;
  int rotate_window = 4;
  int rotate_shift = 1;
  bool grouping = true;
  int tt1_mul = 7, tt1_add = 3;    // singleton lexicon (mul coprime to vocab)
  int tt2_mul = 11, tt2_add = 5;   // pair lexicon
  int max_regen = 64;              // rejection redraw budget per sentence

  int fertility_of(int token) const;
  void validate() const;
  std::string to_json() const;
  static SynthLanguageSpec from_json(const std::string& text);

  // all-ones fertility, no reorder, no grouping, identity lexicon
  static SynthLanguageSpec copy_task(int vocab);
};

struct SynthSentence {
  std::vector<std::string> source;
  std::vector<std::string> target;
  align_data::RawAlignment alignment;  // gold, (source, target) pairs
};

std::vector<SynthSentence> synth_generate(const SynthLanguageSpec& spec, int n_sentences,
                                          std::uint64_t seed);

std::string token_name(int id);

}  // namespace alignkit::synth
