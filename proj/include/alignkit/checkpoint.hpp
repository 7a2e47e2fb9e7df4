#pragma once

#include <memory>
#include <optional>
#include <string>

#include "alignkit/model.hpp"

namespace alignkit::neural {

// Versioned binary checkpoint:
//
//   magic "ALNKCKPT", u32 version (1)
//   u64 config length, config JSON bytes
//   u64 step counter
//   u32 tensor count, then per tensor:
//     u32 name length, name bytes, u32 rows, u32 cols, rows*cols f32 (LE)
//   u8 has_optimizer; when set, two f32 tensors (first and second Adam
//   moments) per parameter in the same order
//
// Parameters are stored as 32-bit floats, so save -> load -> save is
// byte-identical.
struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  std::unique_ptr<Adam> optimizer;  // null when the file has no optimizer state
  long long step = 0;
};

void save_checkpoint(const std::string& path, const Model& model, const Adam* optimizer,
                     long long step);

LoadedCheckpoint load_checkpoint(const std::string& path,
                                 std::optional<AdamConfig> optimizer_cfg = std::nullopt);

}  // namespace alignkit::neural
