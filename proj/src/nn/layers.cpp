#include "rapid/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rapid/core/rng.hpp"

namespace rapid::nn {

namespace {

// Householder QR of a Gaussian matrix; returns n x m (n >= m) with
// orthonormal columns, sign-fixed so the factorization has positive
// R diagonal (makes the draw unique per seed).
std::vector<double> orthonormal_columns(int64_t n, int64_t m, uint64_t seed) {
  Rng rng = Rng(seed).split(0x6f727468);  // init stream tag
  std::vector<double> a(static_cast<size_t>(n * m));
  for (auto& x : a) x = rng.normal();

  std::vector<std::vector<double>> vs(static_cast<size_t>(m));
  std::vector<double> betas(static_cast<size_t>(m), 0.0);
  std::vector<double> signs(static_cast<size_t>(m), 1.0);

  for (int64_t k = 0; k < m; ++k) {
    double norm2 = 0.0;
    for (int64_t i = k; i < n; ++i) norm2 += a[i * m + k] * a[i * m + k];
    double norm = std::sqrt(norm2);
    auto& v = vs[static_cast<size_t>(k)];
    v.assign(static_cast<size_t>(n - k), 0.0);
    if (norm < 1e-300) {
      v[0] = 1.0;
      betas[static_cast<size_t>(k)] = 0.0;
      signs[static_cast<size_t>(k)] = 1.0;
      continue;
    }
    double akk = a[k * m + k];
    double alpha = akk >= 0.0 ? -norm : norm;
    v[0] = akk - alpha;
    for (int64_t i = k + 1; i < n; ++i) v[static_cast<size_t>(i - k)] = a[i * m + k];
    double vnorm2 = 0.0;
    for (double x : v) vnorm2 += x * x;
    double beta = vnorm2 > 0.0 ? 2.0 / vnorm2 : 0.0;
    betas[static_cast<size_t>(k)] = beta;
    signs[static_cast<size_t>(k)] = alpha >= 0.0 ? 1.0 : -1.0;
    for (int64_t j = k; j < m; ++j) {
      double s = 0.0;
      for (int64_t i = k; i < n; ++i) s += v[static_cast<size_t>(i - k)] * a[i * m + j];
      s *= beta;
      for (int64_t i = k; i < n; ++i) a[i * m + j] -= s * v[static_cast<size_t>(i - k)];
    }
  }

  // Q = H_0 ... H_{m-1} E, applied to the left of the thin identity.
  std::vector<double> q(static_cast<size_t>(n * m), 0.0);
  for (int64_t j = 0; j < m; ++j) q[j * m + j] = 1.0;
  for (int64_t k = m - 1; k >= 0; --k) {
    const auto& v = vs[static_cast<size_t>(k)];
    double beta = betas[static_cast<size_t>(k)];
    if (beta == 0.0) continue;
    for (int64_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (int64_t i = k; i < n; ++i) s += v[static_cast<size_t>(i - k)] * q[i * m + j];
      s *= beta;
      for (int64_t i = k; i < n; ++i) q[i * m + j] -= s * v[static_cast<size_t>(i - k)];
    }
  }
  for (int64_t k = 0; k < m; ++k) {
    double d = signs[static_cast<size_t>(k)];
    if (d != 1.0)
      for (int64_t i = 0; i < n; ++i) q[i * m + k] *= d;
  }
  return q;
}

}  // namespace

Tensor init_orthogonal(int64_t rows, int64_t cols, uint64_t seed) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("init_orthogonal: non-positive shape");
  int64_t n = std::max(rows, cols), m = std::min(rows, cols);
  std::vector<double> q = orthonormal_columns(n, m, seed);
  Tensor w({rows, cols});
  if (rows >= cols) {
    w.data = std::move(q);
  } else {
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < cols; ++c) w[r * cols + c] = q[c * m + r];
  }
  return w;
}

Tensor init_delta_orthogonal(const LayerSpec& spec, uint64_t seed) {
  if (spec.kind == LayerKind::dense)
    throw std::invalid_argument("init_delta_orthogonal: conv or deconv only");
  if (spec.kernel % 2 == 0)
    throw std::invalid_argument("init_delta_orthogonal: even kernel size");
  int64_t k = spec.kernel, c = k / 2;
  int64_t in_ch = spec.in_size, out_ch = spec.out_size;
  Tensor h = init_orthogonal(out_ch, in_ch, seed);  // channel map, out x in
  if (spec.kind == LayerKind::conv) {
    Tensor w({out_ch, in_ch, k, k});
    for (int64_t oc = 0; oc < out_ch; ++oc)
      for (int64_t ic = 0; ic < in_ch; ++ic)
        w[((oc * in_ch + ic) * k + c) * k + c] = h[oc * in_ch + ic];
    return w;
  }
  Tensor w({in_ch, out_ch, k, k});
  for (int64_t ic = 0; ic < in_ch; ++ic)
    for (int64_t oc = 0; oc < out_ch; ++oc)
      w[((ic * out_ch + oc) * k + c) * k + c] = h[oc * in_ch + ic];
  return w;
}

ValueId apply_activation(Graph& g, ValueId x, Activation act) {
  switch (act) {
    case Activation::leaky_relu: return g.leaky_relu(x, kLeakySlope);
    case Activation::tanh: return g.tanh_op(x);
    default: return x;
  }
}

Dense::Dense(const std::string& name, int64_t in, int64_t out, uint64_t seed)
    : w(name + ".w", init_orthogonal(in, out, seed)),
      b(name + ".b", Tensor::zeros({1, out})) {}

ValueId Dense::forward(Graph& g, ValueId x) {
  return g.add_rowvec(g.matmul(x, g.param(&w)), g.param(&b));
}

Conv2d::Conv2d(const std::string& name, int64_t in_ch, int64_t out_ch, int64_t kernel,
               int64_t stride_, int64_t pad_, uint64_t seed)
    : stride(stride_), pad(pad_) {
  LayerSpec spec{LayerKind::conv, in_ch, out_ch, kernel, stride_, pad_, 0, Activation::none};
  w = Param(name + ".w", init_delta_orthogonal(spec, seed));
  b = Param(name + ".b", Tensor::zeros({out_ch}));
}

ValueId Conv2d::forward(Graph& g, ValueId x) {
  return g.conv2d(x, g.param(&w), g.param(&b), stride, pad);
}

Deconv2d::Deconv2d(const std::string& name, int64_t in_ch, int64_t out_ch, int64_t kernel,
                   int64_t stride_, int64_t pad_, int64_t out_pad_, uint64_t seed)
    : stride(stride_), pad(pad_), out_pad(out_pad_) {
  LayerSpec spec{LayerKind::deconv, in_ch, out_ch, kernel, stride_, pad_, out_pad_,
                 Activation::none};
  w = Param(name + ".w", init_delta_orthogonal(spec, seed));
  b = Param(name + ".b", Tensor::zeros({out_ch}));
}

ValueId Deconv2d::forward(Graph& g, ValueId x) {
  return g.deconv2d(x, g.param(&w), g.param(&b), stride, pad, out_pad);
}

}  // namespace rapid::nn
