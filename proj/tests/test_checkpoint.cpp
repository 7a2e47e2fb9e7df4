#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "alignkit/checkpoint.hpp"
#include "alignkit/common.hpp"

using namespace alignkit;
using namespace alignkit::neural;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.vocab_size = 12;
  cfg.model_dim = 8;
  cfg.hidden_dim = 16;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.attention_heads = 2;
  cfg.max_duplication_class = 3;
  cfg.vocab_tokens = {"a", "b", "c"};
  return cfg;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = (std::filesystem::temp_directory_path() / name).string();
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("save, load, save is byte identical") {
  Model model(small_config());
  TempFile f1("alignkit_ckpt_a.bin"), f2("alignkit_ckpt_b.bin");
  save_checkpoint(f1.path, model, nullptr, 123);

  auto loaded = load_checkpoint(f1.path);
  CHECK(loaded.step == 123);
  CHECK(loaded.optimizer == nullptr);
  CHECK(loaded.model->config().model_dim == 8);
  CHECK(loaded.model->config().vocab_tokens == std::vector<std::string>{"a", "b", "c"});

  save_checkpoint(f2.path, *loaded.model, nullptr, 123);
  CHECK(read_file(f1.path) == read_file(f2.path));

  // loaded parameters are the f32 rounding of the originals
  for (std::size_t i = 0; i < model.params().count(); ++i) {
    const auto& orig = model.params().var(i)->val;
    const auto& got = loaded.model->params().var(i)->val;
    for (std::size_t k = 0; k < orig.size(); ++k)
      CHECK(got.v[k] == static_cast<double>(static_cast<float>(orig.v[k])));
  }
}

TEST_CASE("optimizer moments round trip") {
  Model model(small_config());
  AdamConfig acfg;
  Adam opt(model.params(), acfg);
  // make the moments nonzero
  model.params().zero_grads();
  for (std::size_t i = 0; i < model.params().count(); ++i)
    for (auto& g : model.params().var(i)->grad.v) g = 0.25;
  opt.step(model.params());

  TempFile f("alignkit_ckpt_opt.bin");
  save_checkpoint(f.path, model, &opt, opt.step_count());
  auto loaded = load_checkpoint(f.path, acfg);
  REQUIRE(loaded.optimizer != nullptr);
  CHECK(loaded.optimizer->step_count() == 1);
  for (std::size_t i = 0; i < model.params().count(); ++i)
    for (std::size_t k = 0; k < opt.moment1(i).size(); ++k) {
      CHECK(loaded.optimizer->moment1(i).v[k] ==
            static_cast<double>(static_cast<float>(opt.moment1(i).v[k])));
      CHECK(loaded.optimizer->moment2(i).v[k] ==
            static_cast<double>(static_cast<float>(opt.moment2(i).v[k])));
    }
}

TEST_CASE("bad files are rejected") {
  TempFile f("alignkit_ckpt_bad.bin");
  write_file(f.path, "definitely not a checkpoint");
  CHECK_THROWS_AS(load_checkpoint(f.path), DataError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/path.bin"), DataError);

  // truncation
  Model model(small_config());
  TempFile g("alignkit_ckpt_trunc.bin");
  save_checkpoint(g.path, model, nullptr, 0);
  const std::string full = read_file(g.path);
  write_file(g.path, full.substr(0, full.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(g.path), DataError);
}

TEST_CASE("architectures carry different parameter sets") {
  ModelConfig cfg = small_config();
  cfg.arch = "nat";
  Model nat(cfg);
  CHECK_FALSE(nat.params().has("dup.conv.w"));
  CHECK_FALSE(nat.params().has("perm.gate.u"));

  cfg.arch = "alignart";
  Model full(cfg);
  CHECK(full.params().has("dup.conv.w"));
  CHECK(full.params().has("copy.emb"));
  CHECK(full.params().has("perm.gate.u"));
  CHECK(full.params().has("grp.proj.w"));

  TempFile f("alignkit_ckpt_nat.bin");
  save_checkpoint(f.path, nat, nullptr, 7);
  auto loaded = load_checkpoint(f.path);
  CHECK(loaded.model->config().arch == "nat");
  CHECK(loaded.model->params().count() == nat.params().count());
}
