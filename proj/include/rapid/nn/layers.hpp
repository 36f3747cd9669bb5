#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rapid/nn/graph.hpp"

namespace rapid::nn {

enum class LayerKind { dense, conv, deconv };
enum class Activation { none, leaky_relu, tanh };

constexpr double kLeakySlope = 0.01;

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  int64_t in_size = 0;   // input features (dense) or channels (conv/deconv)
  int64_t out_size = 0;  // output features or channels
  int64_t kernel = 3;
  int64_t stride = 1;
  int64_t pad = 1;
  int64_t out_pad = 0;   // transposed conv only
  Activation act = Activation::none;
};

// Matrix with orthonormal rows (rows <= cols) or columns (rows >= cols),
// deterministic per seed. Shape [rows, cols].
Tensor init_orthogonal(int64_t rows, int64_t cols, uint64_t seed);

// Kernel that is zero except at the spatial center, where the channel-mixing
// matrix is orthogonal. Layout [out,in,k,k] for conv, [in,out,k,k] for
// deconv. Rejects even kernel sizes.
Tensor init_delta_orthogonal(const LayerSpec& spec, uint64_t seed);

ValueId apply_activation(Graph& g, ValueId x, Activation act);

struct Dense {
  Param w, b;
  Dense() = default;
  Dense(const std::string& name, int64_t in, int64_t out, uint64_t seed);
  ValueId forward(Graph& g, ValueId x);
  std::vector<Param*> params() { return {&w, &b}; }
};

struct Conv2d {
  Param w, b;
  int64_t stride = 1, pad = 1;
  Conv2d() = default;
  Conv2d(const std::string& name, int64_t in_ch, int64_t out_ch, int64_t kernel,
         int64_t stride, int64_t pad, uint64_t seed);
  ValueId forward(Graph& g, ValueId x);
  std::vector<Param*> params() { return {&w, &b}; }
};

struct Deconv2d {
  Param w, b;
  int64_t stride = 1, pad = 1, out_pad = 0;
  Deconv2d() = default;
  Deconv2d(const std::string& name, int64_t in_ch, int64_t out_ch, int64_t kernel,
           int64_t stride, int64_t pad, int64_t out_pad, uint64_t seed);
  ValueId forward(Graph& g, ValueId x);
  std::vector<Param*> params() { return {&w, &b}; }
};

}  // namespace rapid::nn
