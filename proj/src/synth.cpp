#include "alignkit/synth.hpp"

#include <algorithm>
#include <json.hpp>
#include <numeric>

namespace alignkit::synth {

using nlohmann::json;

int SynthLanguageSpec::fertility_of(int token) const {
  if (fertility.empty()) return token % 4;
  return fertility[static_cast<std::size_t>(token)];
}

void SynthLanguageSpec::validate() const {
  if (vocab < 2) throw DataError("synth vocab must be >= 2");
  if (min_words < 1 || max_words < min_words) throw DataError("bad synth sentence length range");
  if (!fertility.empty() && static_cast<int>(fertility.size()) != vocab)
    throw DataError("fertility table must cover the vocabulary");
  for (int f : fertility)
    if (f < 0) throw DataError("fertility must be nonnegative");
  if (rotate_window < 1 || rotate_shift < 0) throw DataError("bad rotation parameters");
  if (std::gcd(tt1_mul, vocab) != 1 || std::gcd(tt2_mul, vocab) != 1)
    throw DataError("lexicon multipliers must be coprime to the vocabulary size");
}

std::string SynthLanguageSpec::to_json() const {
  json j;
  j["vocab"] = vocab;
  j["min_words"] = min_words;
  j["max_words"] = max_words;
  j["fertility"] = fertility;
  j["interleave_copies"] = interleave_copies;
  j["rotate_window"] = rotate_window;
  j["rotate_shift"] = rotate_shift;
  j["grouping"] = grouping;
  j["tt1_mul"] = tt1_mul;
  j["tt1_add"] = tt1_add;
  j["tt2_mul"] = tt2_mul;
  j["tt2_add"] = tt2_add;
  j["max_regen"] = max_regen;
  return j.dump();
}

SynthLanguageSpec SynthLanguageSpec::from_json(const std::string& text) {
  json j = json::parse(text);
  SynthLanguageSpec s;
  s.vocab = j.value("vocab", s.vocab);
  s.min_words = j.value("min_words", s.min_words);
  s.max_words = j.value("max_words", s.max_words);
  s.fertility = j.value("fertility", s.fertility);
  s.interleave_copies = j.value("interleave_copies", s.interleave_copies);
  s.rotate_window = j.value("rotate_window", s.rotate_window);
  s.rotate_shift = j.value("rotate_shift", s.rotate_shift);
  s.grouping = j.value("grouping", s.grouping);
  s.tt1_mul = j.value("tt1_mul", s.tt1_mul);
  s.tt1_add = j.value("tt1_add", s.tt1_add);
  s.tt2_mul = j.value("tt2_mul", s.tt2_mul);
  s.tt2_add = j.value("tt2_add", s.tt2_add);
  s.max_regen = j.value("max_regen", s.max_regen);
  s.validate();
  return s;
}

SynthLanguageSpec SynthLanguageSpec::copy_task(int vocab) {
  SynthLanguageSpec s;
  s.vocab = vocab;
  s.fertility.assign(static_cast<std::size_t>(vocab), 1);
  s.interleave_copies = false;
  s.rotate_shift = 0;
  s.grouping = false;
  s.tt1_mul = 1;
  s.tt1_add = 0;
  s.tt2_mul = 1;
  s.tt2_add = 0;
  return s;
}

std::string token_name(int id) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "w%02d", id);
  return buf;
}

namespace {

struct Slot {
  int position;  // source position m
  int copy;      // copy index j
};

struct Generated {
  std::vector<int> src;
  std::vector<int> tgt;
  std::vector<std::pair<int, int>> pairs;  // (source, target)
  bool has_adjacent_repeat = false;
};

Generated generate_once(const SynthLanguageSpec& spec, DetRng& rng) {
  Generated out;
  const int n_words = rng.uniform_int(spec.min_words, spec.max_words);
  int total_fertility = 0;
  int guard = 0;
  while (total_fertility == 0) {
    if (++guard > 10000) throw DataError("synth spec admits no target tokens");
    out.src.clear();
    total_fertility = 0;
    for (int i = 0; i < n_words; ++i) {
      const int tok = rng.uniform_int(0, spec.vocab - 1);
      out.src.push_back(tok);
      total_fertility += spec.fertility_of(tok);
    }
  }

  // duplication
  std::vector<Slot> slots;
  for (int m = 0; m < n_words; ++m)
    for (int j = 0; j < spec.fertility_of(out.src[m]); ++j) slots.push_back({m, j});

  // permutation: interleave by copy index, then rotate within windows
  if (spec.interleave_copies) {
    std::vector<Slot> inter;
    int max_copy = 0;
    for (const auto& s : slots) max_copy = std::max(max_copy, s.copy);
    for (int j = 0; j <= max_copy; ++j)
      for (const auto& s : slots)
        if (s.copy == j) inter.push_back(s);
    slots = std::move(inter);
  }
  if (spec.rotate_shift > 0) {
    for (std::size_t start = 0; start < slots.size(); start += spec.rotate_window) {
      const std::size_t len = std::min<std::size_t>(spec.rotate_window, slots.size() - start);
      if (len >= 2)
        std::rotate(slots.begin() + start, slots.begin() + start + spec.rotate_shift % len,
                    slots.begin() + start + len);
    }
  }

  // grouping: greedy adjacent merges of slots from distinct source positions
  std::size_t i = 0;
  while (i < slots.size()) {
    const Slot a = slots[i];
    bool merged = false;
    if (spec.grouping && i + 1 < slots.size()) {
      const Slot b = slots[i + 1];
      if (a.position != b.position && out.src[a.position] % 5 == 0) {
        const int tok =
            (spec.tt2_mul * (out.src[a.position] + out.src[b.position]) + spec.tt2_add) %
            spec.vocab;
        const int n = static_cast<int>(out.tgt.size());
        out.tgt.push_back(tok);
        out.pairs.emplace_back(a.position, n);
        out.pairs.emplace_back(b.position, n);
        i += 2;
        merged = true;
      }
    }
    if (!merged) {
      const int tok = (spec.tt1_mul * out.src[a.position] + spec.tt1_add) % spec.vocab;
      const int n = static_cast<int>(out.tgt.size());
      out.tgt.push_back(tok);
      out.pairs.emplace_back(a.position, n);
      ++i;
    }
  }

  for (std::size_t t = 1; t < out.tgt.size(); ++t)
    if (out.tgt[t] == out.tgt[t - 1]) out.has_adjacent_repeat = true;
  return out;
}

}  // namespace

std::vector<SynthSentence> synth_generate(const SynthLanguageSpec& spec, int n_sentences,
                                          std::uint64_t seed) {
  spec.validate();
  DetRng rng(seed);
  std::vector<SynthSentence> corpus;
  corpus.reserve(static_cast<std::size_t>(n_sentences));
  for (int k = 0; k < n_sentences; ++k) {
    Generated gen;
    for (int attempt = 0; attempt < spec.max_regen; ++attempt) {
      gen = generate_once(spec, rng);
      if (!gen.has_adjacent_repeat) break;
    }
    SynthSentence sent;
    for (int tok : gen.src) sent.source.push_back(token_name(tok));
    for (int tok : gen.tgt) sent.target.push_back(token_name(tok));
    sent.alignment.pairs = gen.pairs;
    std::sort(sent.alignment.pairs.begin(), sent.alignment.pairs.end());
    corpus.push_back(std::move(sent));
  }
  return corpus;
}

}  // namespace alignkit::synth
