#include "alignkit/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>

#include "alignkit/align_data.hpp"
#include "alignkit/checkpoint.hpp"
#include "alignkit/decomp.hpp"
#include "alignkit/eval.hpp"
#include "alignkit/pipeline.hpp"
#include "alignkit/synth.hpp"

namespace alignkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSpuriousToken = "<spur>";

struct ToolConfig {
  neural::ModelConfig model;
  neural::AdamConfig adam;
  pipeline::TrainConfig train;
  pipeline::RescoreConfig rescore;
  align_data::FilterConfig filter;
  bool word_level = true;
  std::string marker = "@@";
};

ToolConfig load_config(const std::string& explicit_path) {
  ToolConfig cfg;
  std::string path = explicit_path;
  if (path.empty()) {
    const char* env = std::getenv("ALIGNKIT_CONFIG");
    if (env) path = env;
  }
  if (path.empty()) return cfg;

  json j = json::parse(read_file(path));
  if (j.contains("model")) cfg.model = neural::ModelConfig::from_json(j["model"].dump());
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    cfg.adam.lr_peak = o.value("lr_peak", cfg.adam.lr_peak);
    cfg.adam.lr_start = o.value("lr_start", cfg.adam.lr_start);
    cfg.adam.warmup_steps = o.value("warmup_steps", cfg.adam.warmup_steps);
    cfg.adam.beta1 = o.value("beta1", cfg.adam.beta1);
    cfg.adam.beta2 = o.value("beta2", cfg.adam.beta2);
    cfg.adam.eps = o.value("eps", cfg.adam.eps);
  }
  if (j.contains("training")) {
    const auto& t = j["training"];
    cfg.train.steps = t.value("steps", cfg.train.steps);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
    cfg.train.seed = t.value("seed", cfg.train.seed);
    cfg.train.log_every = t.value("log_every", cfg.train.log_every);
  }
  if (j.contains("rescore")) {
    const auto& r = j["rescore"];
    cfg.rescore.m_prime = r.value("m_prime", cfg.rescore.m_prime);
    cfg.rescore.l_prime = r.value("l_prime", cfg.rescore.l_prime);
    cfg.rescore.a = r.value("a", cfg.rescore.a);
    cfg.rescore.b = r.value("b", cfg.rescore.b);
  }
  if (j.contains("filter")) {
    const auto& f = j["filter"];
    cfg.filter.max_duplication = f.value("max_duplication", cfg.filter.max_duplication);
    cfg.filter.score_filter_ratio = f.value("score_filter_ratio", cfg.filter.score_filter_ratio);
    const std::string nf = f.value("null_fill", std::string("copy"));
    cfg.filter.null_fill = nf == "spurious" ? align_data::NullFillStrategy::SpuriousToken
                                            : align_data::NullFillStrategy::CopyPrevious;
    cfg.word_level = f.value("word_level", cfg.word_level);
    cfg.marker = f.value("marker", cfg.marker);
  }
  return cfg;
}

std::vector<std::vector<std::string>> tokenize_lines(const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(split_ws(l));
  return out;
}

std::vector<int> parse_word_map_line(const std::string& line) {
  std::vector<int> out;
  for (const auto& tok : split_ws(line)) out.push_back(std::stoi(tok));
  return out;
}

struct CorpusOnDisk {
  std::vector<align_data::AlignedSample> samples;
};

CorpusOnDisk read_aligned_corpus(const std::string& src_path, const std::string& tgt_path,
                                 const std::string& align_path) {
  const auto src = tokenize_lines(read_lines(src_path));
  const auto tgt = tokenize_lines(read_lines(tgt_path));
  const auto align = read_lines(align_path);
  if (src.size() != tgt.size() || src.size() != align.size())
    throw DataError("corpus files disagree on sentence count");
  CorpusOnDisk corpus;
  corpus.samples.resize(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto& s = corpus.samples[i];
    s.pair.source_tokens = src[i];
    s.pair.target_tokens = tgt[i];
    if (s.pair.source_tokens.empty() || s.pair.target_tokens.empty())
      throw DataError("empty sentence at line " + std::to_string(i + 1));
    const auto raw = align_data::parse_pharaoh(align[i],
                                               static_cast<int>(s.pair.source_tokens.size()),
                                               static_cast<int>(s.pair.target_tokens.size()));
    s.matrix = align_data::to_matrix(raw, static_cast<int>(s.pair.source_tokens.size()),
                                     static_cast<int>(s.pair.target_tokens.size()));
  }
  return corpus;
}

void write_aligned_corpus(const std::vector<align_data::AlignedSample>& samples,
                          const std::string& src_path, const std::string& tgt_path,
                          const std::string& align_path) {
  std::vector<std::string> src, tgt, align;
  for (const auto& s : samples) {
    src.push_back(join(s.pair.source_tokens, " "));
    tgt.push_back(join(s.pair.target_tokens, " "));
    align.push_back(align_data::serialize_pharaoh(align_data::to_pairs(s.matrix)));
  }
  write_lines(src_path, src);
  write_lines(tgt_path, tgt);
  write_lines(align_path, align);
}

pipeline::Vocab vocab_for_corpus_dir(const std::string& dir,
                                     const std::vector<align_data::AlignedSample>& samples) {
  const std::string path = (fs::path(dir) / "vocab.txt").string();
  pipeline::Vocab vocab;
  if (fs::exists(path)) vocab = pipeline::Vocab::load(path);
  for (const auto& s : samples) vocab.extend({s.pair.source_tokens, s.pair.target_tokens});
  vocab.save(path);
  return vocab;
}

// --- subcommands ---------------------------------------------------------------

int cmd_preprocess(const std::string& src_path, const std::string& tgt_path,
                   const std::string& align_path, const std::string& score_path,
                   const std::string& src_map_path, const std::string& tgt_map_path,
                   const std::string& out_dir, const std::string& prefix, ToolConfig cfg,
                   int threads) {
  const auto src = tokenize_lines(read_lines(src_path));
  const auto tgt = tokenize_lines(read_lines(tgt_path));
  const auto align_lines = read_lines(align_path);
  if (src.size() != tgt.size() || src.size() != align_lines.size())
    throw DataError("corpus files disagree on sentence count");

  std::vector<double> scores;
  if (!score_path.empty()) {
    for (const auto& l : read_lines(score_path)) scores.push_back(std::stod(l));
    if (scores.size() != src.size()) throw DataError("score file length mismatch");
  } else if (cfg.filter.score_filter_ratio > 0.0) {
    throw DataError("score filtering requested but no --score file given (use --score-filter 0)");
  }

  std::vector<std::string> src_maps, tgt_maps;
  if (!src_map_path.empty()) {
    src_maps = read_lines(src_map_path);
    if (src_maps.size() != src.size()) throw DataError("source word-map length mismatch");
  }
  if (!tgt_map_path.empty()) {
    tgt_maps = read_lines(tgt_map_path);
    if (tgt_maps.size() != tgt.size()) throw DataError("target word-map length mismatch");
  }

  const std::size_t n = src.size();
  std::vector<std::optional<align_data::AlignedSample>> processed(n);
  std::vector<char> dropped_null(n, 0);
  std::vector<char> used_spurious(n, 0);
  std::mutex fail_mutex;
  std::optional<std::string> failure;

  parallel_for(n, threads, [&](std::size_t i) {
    try {
      align_data::SentencePair pair;
      pair.source_tokens = src[i];
      pair.target_tokens = tgt[i];
      if (pair.source_tokens.empty() || pair.target_tokens.empty())
        throw DataError("empty sentence at line " + std::to_string(i + 1));
      pair.source_word_map = src_maps.empty()
                                 ? align_data::word_map_from_marker(pair.source_tokens, cfg.marker)
                                 : parse_word_map_line(src_maps[i]);
      pair.target_word_map = tgt_maps.empty()
                                 ? align_data::word_map_from_marker(pair.target_tokens, cfg.marker)
                                 : parse_word_map_line(tgt_maps[i]);
      if (!scores.empty()) pair.alignment_score = scores[i];

      const int m_len = static_cast<int>(pair.source_tokens.size());
      const int n_len = static_cast<int>(pair.target_tokens.size());
      auto matrix = align_data::to_matrix(
          align_data::parse_pharaoh(align_lines[i], m_len, n_len), m_len, n_len);

      if (cfg.word_level) {
        const auto word_level = align_data::reduce_to_words(matrix, pair.source_word_map);
        matrix = align_data::expand_to_subwords(word_level, pair.source_word_map);
      }

      try {
        auto filled = align_data::fill_null_rows(matrix, pair, cfg.filter.null_fill);
        if (filled.spurious_added) {
          pair.source_tokens.push_back(kSpuriousToken);
          pair.source_word_map.push_back(pair.source_word_map.empty()
                                             ? 0
                                             : pair.source_word_map.back() + 1);
          used_spurious[i] = 1;
        }
        align_data::AlignedSample sample;
        sample.pair = std::move(pair);
        sample.matrix = std::move(filled.matrix);
        processed[i] = std::move(sample);
      } catch (const align_data::UnprocessableSample&) {
        dropped_null[i] = 1;
      }
    } catch (const DataError& e) {
      std::lock_guard<std::mutex> lock(fail_mutex);
      if (!failure) failure = std::string(e.what()) + " (line " + std::to_string(i + 1) + ")";
    }
  });
  if (failure) throw DataError(*failure);

  std::vector<align_data::AlignedSample> kept;
  long long n_dropped_null = 0, n_spurious = 0;
  for (std::size_t i = 0; i < n; ++i) {
    n_dropped_null += dropped_null[i];
    n_spurious += used_spurious[i];
    if (processed[i]) kept.push_back(std::move(*processed[i]));
  }
  const std::size_t before_dup = kept.size();
  kept = align_data::filter_by_duplication(std::move(kept), cfg.filter.max_duplication);
  const std::size_t before_score = kept.size();
  kept = align_data::filter_by_score(std::move(kept), cfg.filter.score_filter_ratio);

  fs::create_directories(out_dir);
  const fs::path base = fs::path(out_dir);
  write_aligned_corpus(kept, (base / (prefix + ".src")).string(),
                       (base / (prefix + ".tgt")).string(),
                       (base / (prefix + ".align")).string());
  vocab_for_corpus_dir(out_dir, kept);

  json stats;
  stats["input"] = n;
  stats["kept"] = kept.size();
  stats["dropped_null_row"] = n_dropped_null;
  stats["dropped_duplication_cap"] = before_dup - before_score;
  stats["dropped_score_filter"] = before_score - kept.size();
  stats["spurious_sentences"] = n_spurious;
  std::cout << stats.dump() << "\n";
  return 0;
}

int cmd_decompose(const std::string& align_path, const std::string& src_path,
                  const std::string& tgt_path, const std::string& out_path) {
  const auto corpus = read_aligned_corpus(src_path, tgt_path, align_path);
  std::vector<std::string> lines;
  for (const auto& s : corpus.samples) {
    const auto d = decomp::decompose(s.matrix);
    json j;
    j["c"] = d.c;
    j["r"] = d.r;
    j["perm"] = d.perm;
    j["g"] = d.g;
    lines.push_back(j.dump());
  }
  if (out_path.empty() || out_path == "-")
    for (const auto& l : lines) std::cout << l << "\n";
  else
    write_lines(out_path, lines);
  return 0;
}

int cmd_synth_data(const std::string& out_dir, int n_train, int n_test, std::uint64_t seed,
                   const synth::SynthLanguageSpec& spec) {
  fs::create_directories(out_dir);
  const fs::path base(out_dir);

  auto emit = [&](const std::string& prefix, const std::vector<synth::SynthSentence>& corpus) {
    std::vector<std::string> src, tgt, align;
    for (const auto& s : corpus) {
      src.push_back(join(s.source, " "));
      tgt.push_back(join(s.target, " "));
      align.push_back(align_data::serialize_pharaoh(s.alignment));
    }
    write_lines((base / (prefix + ".src")).string(), src);
    write_lines((base / (prefix + ".tgt")).string(), tgt);
    write_lines((base / (prefix + ".align")).string(), align);
  };

  emit("train", synth::synth_generate(spec, n_train, seed));
  emit("test", synth::synth_generate(spec, n_test, seed + 1));

  // the full alphabet, so train/test share one complete vocabulary
  std::vector<std::string> alphabet;
  for (int t = 0; t < spec.vocab; ++t) alphabet.push_back(synth::token_name(t));
  pipeline::Vocab::from_tokens(alphabet).save((base / "vocab.txt").string());

  json meta;
  meta["spec"] = json::parse(spec.to_json());
  meta["seed"] = seed;
  meta["n_train"] = n_train;
  meta["n_test"] = n_test;
  write_file((base / "meta.json").string(), meta.dump(2) + "\n");
  return 0;
}

int cmd_train(const std::string& corpus_dir, const std::string& prefix,
              const std::string& out_path, ToolConfig cfg, const std::string& log_path) {
  const fs::path base(corpus_dir);
  auto corpus = read_aligned_corpus((base / (prefix + ".src")).string(),
                                    (base / (prefix + ".tgt")).string(),
                                    (base / (prefix + ".align")).string());
  const std::string vocab_path = (base / "vocab.txt").string();
  if (!fs::exists(vocab_path)) throw DataError("missing vocab.txt in corpus dir " + corpus_dir);
  pipeline::Vocab vocab = pipeline::Vocab::load(vocab_path);

  cfg.model.vocab_size = vocab.size();
  cfg.model.vocab_tokens = vocab.raw_tokens();
  neural::Model model(cfg.model);
  cfg.train.adam = cfg.adam;

  auto samples = pipeline::prepare_training_samples(corpus.samples, vocab);
  pipeline::Trainer trainer(model, std::move(samples), cfg.train);

  std::ofstream log_file;
  std::ostream* log = &std::cerr;
  if (!log_path.empty()) {
    log_file.open(log_path);
    if (!log_file) throw DataError("cannot write log file: " + log_path);
    log = &log_file;
  }

  for (long long step = 1; step <= cfg.train.steps; ++step) {
    const auto report = trainer.train_step();
    if (step % cfg.train.log_every == 0 || step == cfg.train.steps) {
      json j;
      j["step"] = step;
      j["lr"] = trainer.optimizer().lr_for_step(step);
      j["loss"] = report.total;
      j["loss_t"] = report.translation;
      j["loss_d"] = report.duplication;
      j["loss_p"] = report.permutation;
      j["loss_g"] = report.grouping;
      (*log) << j.dump() << "\n";
    }
  }
  neural::save_checkpoint(out_path, model, &trainer.optimizer(), trainer.step());
  return 0;
}

pipeline::Vocab vocab_from_model(const neural::Model& model) {
  if (model.config().vocab_tokens.empty())
    throw DataError("checkpoint carries no vocabulary");
  return pipeline::Vocab::from_tokens(model.config().vocab_tokens);
}

std::vector<std::vector<int>> ids_for_lines(const std::vector<std::vector<std::string>>& lines,
                                            const pipeline::Vocab& vocab) {
  std::vector<std::vector<int>> out;
  out.reserve(lines.size());
  for (const auto& toks : lines) {
    std::vector<int> ids;
    for (const auto& t : toks) ids.push_back(vocab.id_of(t));
    out.push_back(std::move(ids));
  }
  return out;
}

int cmd_translate(const std::string& ckpt_path, const std::string& input_path,
                  const std::string& output_path, const std::string& ablate_str, bool rescore,
                  const std::string& teacher_path, ToolConfig cfg,
                  const std::string& emit_alignments, int threads) {
  auto loaded = neural::load_checkpoint(ckpt_path);
  neural::Model& model = *loaded.model;
  const pipeline::Vocab vocab = vocab_from_model(model);

  pipeline::Ablation ablate = pipeline::Ablation::None;
  if (ablate_str == "D")
    ablate = pipeline::Ablation::Duplication;
  else if (ablate_str == "P")
    ablate = pipeline::Ablation::Permutation;
  else if (ablate_str == "G")
    ablate = pipeline::Ablation::Grouping;
  else if (!ablate_str.empty())
    throw DataError("--ablate expects D, P or G");

  const auto lines = tokenize_lines(read_lines(input_path));
  for (const auto& l : lines)
    if (l.empty()) throw DataError("empty input sentence");
  const auto inputs = ids_for_lines(lines, vocab);

  std::unique_ptr<neural::Model> teacher;
  pipeline::SequenceScorer scorer;
  if (rescore) {
    if (teacher_path.empty()) throw DataError("--rescore requires --teacher");
    auto t = neural::load_checkpoint(teacher_path);
    teacher = std::move(t.model);
    scorer = pipeline::teacher_scorer(*teacher);
    cfg.rescore.validate();
  }

  std::vector<pipeline::TranslationResult> results(inputs.size());
  parallel_for(inputs.size(), threads, [&](std::size_t i) {
    if (rescore)
      results[i] = pipeline::rescore_translate(model, inputs[i], cfg.rescore, scorer).best;
    else
      results[i] = pipeline::translate(model, inputs[i], ablate);
  });

  std::vector<std::string> out_lines, align_lines;
  for (const auto& r : results) {
    std::vector<std::string> toks;
    for (int id : r.tokens) toks.push_back(vocab.token_of(id));
    out_lines.push_back(join(toks, " "));
    if (!emit_alignments.empty())
      align_lines.push_back(align_data::serialize_pharaoh(align_data::to_pairs(r.alignment)));
  }
  if (output_path.empty() || output_path == "-")
    for (const auto& l : out_lines) std::cout << l << "\n";
  else
    write_lines(output_path, out_lines);
  if (!emit_alignments.empty()) write_lines(emit_alignments, align_lines);
  return 0;
}

int cmd_oracle_translate(const std::string& ckpt_path, const std::string& input_path,
                         const std::string& align_path, const std::string& tgt_path,
                         const std::string& output_path, int threads) {
  auto loaded = neural::load_checkpoint(ckpt_path);
  neural::Model& model = *loaded.model;
  const pipeline::Vocab vocab = vocab_from_model(model);

  const auto lines = tokenize_lines(read_lines(input_path));
  const auto inputs = ids_for_lines(lines, vocab);
  const auto align_lines = read_lines(align_path);
  if (align_lines.size() != inputs.size()) throw DataError("alignment file length mismatch");
  std::vector<int> n_lens(inputs.size(), 0);
  if (!tgt_path.empty()) {
    const auto tgt = tokenize_lines(read_lines(tgt_path));
    if (tgt.size() != inputs.size()) throw DataError("target file length mismatch");
    for (std::size_t i = 0; i < tgt.size(); ++i) n_lens[i] = static_cast<int>(tgt[i].size());
  } else {
    // gold alignments have no null rows, so max target index + 1 recovers N
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      int n = 0;
      for (const auto& tok : split_ws(align_lines[i])) {
        const auto dash = tok.find('-');
        if (dash != std::string::npos)
          n = std::max(n, std::stoi(tok.substr(dash + 1)) + 1);
      }
      n_lens[i] = n;
    }
  }

  std::vector<pipeline::TranslationResult> results(inputs.size());
  parallel_for(inputs.size(), threads, [&](std::size_t i) {
    const int m_len = static_cast<int>(inputs[i].size());
    if (n_lens[i] < 1) throw DataError("cannot infer target length at line " + std::to_string(i + 1));
    const auto raw = align_data::parse_pharaoh(align_lines[i], m_len, n_lens[i]);
    const auto gold = align_data::to_matrix(raw, m_len, n_lens[i]);
    results[i] = pipeline::oracle_translate(model, inputs[i], gold);
  });

  std::vector<std::string> out_lines;
  for (const auto& r : results) {
    std::vector<std::string> toks;
    for (int id : r.tokens) toks.push_back(vocab.token_of(id));
    out_lines.push_back(join(toks, " "));
  }
  if (output_path.empty() || output_path == "-")
    for (const auto& l : out_lines) std::cout << l << "\n";
  else
    write_lines(output_path, out_lines);
  return 0;
}

int cmd_score(const std::string& hyp_path, const std::string& ref_path,
              const std::string& ckpt_path, const std::string& src_path,
              const std::string& align_path, bool no_smoothing) {
  const auto hyp = tokenize_lines(read_lines(hyp_path));
  const auto ref = tokenize_lines(read_lines(ref_path));

  json out;
  out["bleu"] = eval::corpus_bleu(hyp, ref, 4, !no_smoothing);
  const auto rep = eval::repetition_ratio(hyp);
  out["repeat_ratio"] = rep.repeat_ratio;
  out["token_count"] = rep.token_count;

  if (!ckpt_path.empty()) {
    if (src_path.empty() || align_path.empty())
      throw DataError("aligner accuracy needs --src and --align alongside --ckpt");
    auto loaded = neural::load_checkpoint(ckpt_path);
    neural::Model& model = *loaded.model;
    const pipeline::Vocab vocab = vocab_from_model(model);
    auto corpus = read_aligned_corpus(src_path, ref_path, align_path);
    const auto samples = pipeline::prepare_training_samples(corpus.samples, vocab);
    const auto acc = eval::aligner_accuracy(model, samples);
    out["dup_acc"] = acc.dup_acc;
    out["perm_acc"] = acc.perm_acc;
    out["group_acc"] = acc.group_acc;
  }
  std::cout << out.dump() << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"alignkit: alignment-decomposed non-autoregressive translation toolkit"};
  app.require_subcommand(1);

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "filter and repair an aligned parallel corpus");
  std::string pre_src, pre_tgt, pre_align, pre_score, pre_src_map, pre_tgt_map, pre_out;
  std::string pre_prefix = "train", pre_null = "copy", pre_word = "on", pre_config;
  std::string pre_marker = "@@";
  int pre_max_dup = 16, pre_threads = 1;
  double pre_score_filter = 0.05;
  pre->add_option("--src", pre_src, "source token file")->required();
  pre->add_option("--tgt", pre_tgt, "target token file")->required();
  pre->add_option("--align", pre_align, "Pharaoh alignment file")->required();
  pre->add_option("--score", pre_score, "per-sentence alignment score file");
  pre->add_option("--src-word-map", pre_src_map, "source word-map sidecar");
  pre->add_option("--tgt-word-map", pre_tgt_map, "target word-map sidecar");
  pre->add_option("--out", pre_out, "output corpus directory")->required();
  pre->add_option("--prefix", pre_prefix, "output file prefix");
  pre->add_option("--max-dup", pre_max_dup, "duplication cap (drop above)");
  pre->add_option("--score-filter", pre_score_filter, "per-length score filter ratio");
  pre->add_option("--null-fill", pre_null, "null-row strategy: copy|spurious")
      ->check(CLI::IsMember({"copy", "spurious"}));
  pre->add_option("--word-level", pre_word, "word-level alignment reduction: on|off")
      ->check(CLI::IsMember({"on", "off"}));
  pre->add_option("--marker", pre_marker, "subword continuation marker");
  pre->add_option("--threads", pre_threads, "worker threads");
  pre->add_option("--config", pre_config, "JSON config file");

  // decompose
  auto* dec = app.add_subcommand("decompose", "emit gold D/P/G factors as JSON lines");
  std::string dec_align, dec_src, dec_tgt, dec_out;
  dec->add_option("--align", dec_align, "Pharaoh alignment file")->required();
  dec->add_option("--src", dec_src, "source token file (for M)")->required();
  dec->add_option("--tgt", dec_tgt, "target token file (for N)")->required();
  dec->add_option("--out", dec_out, "output JSONL path (default stdout)");

  // synth-data
  auto* syn = app.add_subcommand("synth-data", "generate a synthetic aligned corpus");
  std::string syn_out;
  int syn_train = 5000, syn_test = 500, syn_vocab = 50, syn_window = 4, syn_shift = 1;
  int syn_min_words = 4, syn_max_words = 10;
  std::uint64_t syn_seed = 1;
  bool syn_copy_task = false, syn_no_grouping = false, syn_no_interleave = false;
  syn->add_option("--out", syn_out, "output corpus directory")->required();
  syn->add_option("--n-train", syn_train, "training sentences");
  syn->add_option("--n-test", syn_test, "test sentences");
  syn->add_option("--seed", syn_seed, "generation seed");
  syn->add_option("--vocab", syn_vocab, "alphabet size");
  syn->add_option("--rotate-window", syn_window, "rotation window");
  syn->add_option("--rotate-shift", syn_shift, "rotation shift");
  syn->add_option("--min-words", syn_min_words, "minimum source words");
  syn->add_option("--max-words", syn_max_words, "maximum source words");
  syn->add_flag("--copy-task", syn_copy_task, "identity copy language");
  syn->add_flag("--no-grouping", syn_no_grouping, "disable many-to-one merges");
  syn->add_flag("--no-interleave", syn_no_interleave, "disable copy interleaving");

  // train
  auto* tr = app.add_subcommand("train", "train a model on a preprocessed corpus");
  std::string tr_corpus, tr_out, tr_config, tr_log, tr_prefix = "train", tr_arch;
  long long tr_steps = -1;
  int tr_batch = -1;
  std::int64_t tr_seed = -1;
  tr->add_option("--corpus", tr_corpus, "corpus directory")->required();
  tr->add_option("--out", tr_out, "output checkpoint path")->required();
  tr->add_option("--config", tr_config, "JSON config file");
  tr->add_option("--arch", tr_arch, "model architecture: alignart|nat|art");
  tr->add_option("--steps", tr_steps, "training steps");
  tr->add_option("--batch-size", tr_batch, "sentences per step");
  tr->add_option("--seed", tr_seed, "training seed");
  tr->add_option("--log", tr_log, "JSONL training log path (default stderr)");
  tr->add_option("--prefix", tr_prefix, "corpus file prefix");

  // translate
  auto* ts = app.add_subcommand("translate", "translate with a trained alignart model");
  std::string ts_ckpt, ts_input, ts_output, ts_ablate, ts_teacher, ts_config, ts_emit;
  bool ts_rescore = false;
  int ts_threads = 1;
  ts->add_option("--ckpt", ts_ckpt, "model checkpoint")->required();
  ts->add_option("--input", ts_input, "source token file")->required();
  ts->add_option("--output", ts_output, "output token file (default stdout)");
  ts->add_option("--ablate", ts_ablate, "replace a predicted matrix with identity: D|P|G");
  ts->add_flag("--rescore", ts_rescore, "re-scoring decoding");
  ts->add_option("--teacher", ts_teacher, "autoregressive teacher checkpoint");
  ts->add_option("--emit-alignments", ts_emit, "write predicted alignments (Pharaoh)");
  ts->add_option("--config", ts_config, "JSON config file (rescore section)");
  ts->add_option("--threads", ts_threads, "worker threads");

  // oracle-translate
  auto* ot = app.add_subcommand("oracle-translate", "decode with supplied gold alignments");
  std::string ot_ckpt, ot_input, ot_align, ot_tgt, ot_output;
  int ot_threads = 1;
  ot->add_option("--ckpt", ot_ckpt, "model checkpoint")->required();
  ot->add_option("--input", ot_input, "source token file")->required();
  ot->add_option("--alignments", ot_align, "gold Pharaoh alignment file")->required();
  ot->add_option("--tgt", ot_tgt, "reference target file (for target lengths)");
  ot->add_option("--output", ot_output, "output token file (default stdout)");
  ot->add_option("--threads", ot_threads, "worker threads");

  // score
  auto* sc = app.add_subcommand("score", "BLEU, repetition ratio and aligner accuracy");
  std::string sc_hyp, sc_ref, sc_ckpt, sc_src, sc_align;
  bool sc_no_smoothing = false;
  sc->add_option("--hyp", sc_hyp, "hypothesis token file")->required();
  sc->add_option("--ref", sc_ref, "reference token file")->required();
  sc->add_option("--ckpt", sc_ckpt, "model checkpoint (enables aligner accuracy)");
  sc->add_option("--src", sc_src, "source token file (with --ckpt)");
  sc->add_option("--align", sc_align, "gold alignment file (with --ckpt)");
  sc->add_flag("--no-smoothing", sc_no_smoothing, "disable BLEU floor smoothing");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (pre->parsed()) {
      ToolConfig cfg = load_config(pre_config);
      if (pre->count("--max-dup")) cfg.filter.max_duplication = pre_max_dup;
      if (pre->count("--score-filter")) cfg.filter.score_filter_ratio = pre_score_filter;
      if (pre->count("--null-fill") || pre_config.empty())
        cfg.filter.null_fill = pre_null == "spurious"
                                   ? align_data::NullFillStrategy::SpuriousToken
                                   : align_data::NullFillStrategy::CopyPrevious;
      if (pre->count("--word-level") || pre_config.empty()) cfg.word_level = pre_word == "on";
      if (pre->count("--marker")) cfg.marker = pre_marker;
      return cmd_preprocess(pre_src, pre_tgt, pre_align, pre_score, pre_src_map, pre_tgt_map,
                            pre_out, pre_prefix, cfg, pre_threads);
    }
    if (dec->parsed()) return cmd_decompose(dec_align, dec_src, dec_tgt, dec_out);
    if (syn->parsed()) {
      synth::SynthLanguageSpec spec =
          syn_copy_task ? synth::SynthLanguageSpec::copy_task(syn_vocab)
                        : synth::SynthLanguageSpec{};
      if (!syn_copy_task) {
        spec.vocab = syn_vocab;
        spec.rotate_window = syn_window;
        spec.rotate_shift = syn_shift;
        spec.min_words = syn_min_words;
        spec.max_words = syn_max_words;
        if (syn_no_grouping) spec.grouping = false;
        if (syn_no_interleave) spec.interleave_copies = false;
      }
      return cmd_synth_data(syn_out, syn_train, syn_test, syn_seed, spec);
    }
    if (tr->parsed()) {
      ToolConfig cfg = load_config(tr_config);
      if (!tr_arch.empty()) cfg.model.arch = tr_arch;
      if (tr_steps > 0) cfg.train.steps = tr_steps;
      if (tr_batch > 0) cfg.train.batch_size = tr_batch;
      if (tr_seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(tr_seed);
      return cmd_train(tr_corpus, tr_prefix, tr_out, cfg, tr_log);
    }
    if (ts->parsed()) {
      ToolConfig cfg = load_config(ts_config);
      return cmd_translate(ts_ckpt, ts_input, ts_output, ts_ablate, ts_rescore, ts_teacher, cfg,
                           ts_emit, ts_threads);
    }
    if (ot->parsed())
      return cmd_oracle_translate(ot_ckpt, ot_input, ot_align, ot_tgt, ot_output, ot_threads);
    if (sc->parsed())
      return cmd_score(sc_hyp, sc_ref, sc_ckpt, sc_src, sc_align, sc_no_smoothing);
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace alignkit::cli
