#include "alignkit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace alignkit::neural {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'A', 'L', 'N', 'K', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4)) throw DataError("truncated checkpoint");
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 8)) throw DataError("truncated checkpoint");
  return v;
}

void put_tensor_f32(std::ostream& os, const Tensor& t) {
  for (double d : t.v) {
    const float f = static_cast<float>(d);
    os.write(reinterpret_cast<const char*>(&f), 4);
  }
}

void get_tensor_f32(std::istream& is, Tensor& t) {
  for (auto& d : t.v) {
    float f = 0.0f;
    if (!is.read(reinterpret_cast<char*>(&f), 4)) throw DataError("truncated checkpoint tensor");
    d = static_cast<double>(f);
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, const Adam* optimizer,
                     long long step) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint: " + path);
  os.write(kMagic, 8);
  put_u32(os, kVersion);
  const std::string cfg = model.config().to_json();
  put_u64(os, cfg.size());
  os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  put_u64(os, static_cast<std::uint64_t>(step));

  const auto& params = model.params();
  put_u32(os, static_cast<std::uint32_t>(params.count()));
  for (std::size_t i = 0; i < params.count(); ++i) {
    const std::string& name = params.name(i);
    const Tensor& t = params.var(i)->val;
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<std::uint32_t>(t.rows));
    put_u32(os, static_cast<std::uint32_t>(t.cols));
    put_tensor_f32(os, t);
  }

  os.put(optimizer ? 1 : 0);
  if (optimizer) {
    for (std::size_t i = 0; i < params.count(); ++i) {
      put_tensor_f32(os, optimizer->moment1(i));
      put_tensor_f32(os, optimizer->moment2(i));
    }
  }
  if (!os) throw DataError("failed writing checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path, std::optional<AdamConfig> opt_cfg) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError("not an alignkit checkpoint: " + path);
  const std::uint32_t version = get_u32(is);
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));

  const std::uint64_t cfg_len = get_u64(is);
  std::string cfg_text(cfg_len, '\0');
  if (!is.read(cfg_text.data(), static_cast<std::streamsize>(cfg_len)))
    throw DataError("truncated checkpoint config");

  LoadedCheckpoint out;
  out.step = static_cast<long long>(get_u64(is));
  out.model = std::make_unique<Model>(ModelConfig::from_json(cfg_text));

  auto& params = out.model->params();
  const std::uint32_t count = get_u32(is);
  if (count != params.count()) throw DataError("checkpoint parameter count mismatch");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = get_u32(is);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw DataError("truncated checkpoint name");
    if (name != params.name(i)) throw DataError("checkpoint parameter order mismatch: " + name);
    const int rows = static_cast<int>(get_u32(is));
    const int cols = static_cast<int>(get_u32(is));
    Tensor& t = params.var(i)->val;
    if (rows != t.rows || cols != t.cols)
      throw DataError("checkpoint shape mismatch for " + name);
    get_tensor_f32(is, t);
  }

  int has_opt = is.get();
  if (has_opt == 1) {
    auto opt = std::make_unique<Adam>(params, opt_cfg.value_or(AdamConfig{}));
    for (std::size_t i = 0; i < params.count(); ++i) {
      get_tensor_f32(is, opt->moment1(i));
      get_tensor_f32(is, opt->moment2(i));
    }
    opt->set_step_count(out.step);
    out.optimizer = std::move(opt);
  } else if (has_opt != 0) {
    throw DataError("corrupt optimizer flag in checkpoint");
  }
  return out;
}

}  // namespace alignkit::neural
