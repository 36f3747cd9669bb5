#pragma once

#include <string>
#include <vector>

#include "rapid/nn/graph.hpp"

namespace rapid::nn {

// Versioned little-endian parameter container. Layout:
//   magic "RAPIDCKPT1", u32 version,
//   u64 config_len + config text (the flat key=value echo),
//   u64 count, then per entry: u64 name_len + name, u32 ndim, u64 dims[],
//   f64 payload.
struct CheckpointEntry {
  std::string name;
  Tensor tensor;
};

void save_checkpoint(const std::string& path, const std::vector<Param*>& params,
                     const std::string& config_text);

struct Checkpoint {
  std::string config_text;
  std::vector<CheckpointEntry> entries;

  const Tensor* find(const std::string& name) const;
  // Copies payloads into the given params; throws if a name is missing or a
  // shape differs.
  void load_into(const std::vector<Param*>& params) const;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace rapid::nn
