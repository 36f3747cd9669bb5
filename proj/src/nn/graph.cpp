#include "rapid/nn/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace rapid::nn {

namespace {
void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                a.shape_str() + " vs " + b.shape_str());
}
}  // namespace

ValueId Graph::push(Tensor val, bool needs_grad, std::function<void(Graph&)> back) {
  Node n;
  n.val = std::move(val);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<ValueId>(nodes_.size() - 1);
}

ValueId Graph::constant(Tensor t) { return push(std::move(t), false, nullptr); }

ValueId Graph::param(Param* p) {
  ValueId id = push(p->value, true, nullptr);
  nodes_.back().back = [id, p](Graph& g) {
    const Tensor& gd = g.grad_ref(id);
    for (int64_t i = 0; i < gd.numel(); ++i) p->grad[i] += gd[i];
  };
  return id;
}

ValueId Graph::matmul(ValueId x, ValueId w) {
  const Tensor& xv = val(x);
  const Tensor& wv = val(w);
  if (xv.ndim() != 2 || wv.ndim() != 2 || xv.dim(1) != wv.dim(0))
    throw std::invalid_argument("matmul: bad shapes " + xv.shape_str() + " x " + wv.shape_str());
  int64_t m = xv.dim(0), k = xv.dim(1), n = wv.dim(1);
  Tensor y({m, n});
  kernels::matmul(xv.ptr(), wv.ptr(), y.ptr(), m, k, n);
  bool ng = needs_grad(x) || needs_grad(w);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, x, w, m, k, n](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      if (g.needs_grad(x))
        kernels::matmul_grad_x(dy.ptr(), g.val(w).ptr(), g.grad_ref(x).ptr(), m, k, n);
      if (g.needs_grad(w))
        kernels::matmul_grad_w(g.val(x).ptr(), dy.ptr(), g.grad_ref(w).ptr(), m, k, n);
    };
  return id;
}

ValueId Graph::conv2d(ValueId x, ValueId w, ValueId bias, int64_t stride, int64_t pad) {
  const Tensor& xv = val(x);
  const Tensor& wv = val(w);
  if (xv.ndim() != 4 || wv.ndim() != 4 || xv.dim(1) != wv.dim(1))
    throw std::invalid_argument("conv2d: bad shapes " + xv.shape_str() + ", " + wv.shape_str());
  kernels::Conv2dDims d{xv.dim(0), xv.dim(1), xv.dim(2), xv.dim(3),
                        wv.dim(0), wv.dim(2), wv.dim(3), stride, pad};
  Tensor y({d.batch, d.out_ch, d.out_h(), d.out_w()});
  const double* bp = bias >= 0 ? val(bias).ptr() : nullptr;
  kernels::conv2d_forward(d, xv.ptr(), wv.ptr(), bp, y.ptr());
  bool ng = needs_grad(x) || needs_grad(w) || (bias >= 0 && needs_grad(bias));
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, x, w, bias, d](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      if (g.needs_grad(x))
        kernels::conv2d_grad_input(d, dy.ptr(), g.val(w).ptr(), g.grad_ref(x).ptr());
      bool need_w = g.needs_grad(w);
      bool need_b = bias >= 0 && g.needs_grad(bias);
      if (need_w || need_b)
        kernels::conv2d_grad_weights(d, dy.ptr(), g.val(x).ptr(),
                                     need_w ? g.grad_ref(w).ptr() : nullptr,
                                     need_b ? g.grad_ref(bias).ptr() : nullptr);
    };
  return id;
}

ValueId Graph::deconv2d(ValueId x, ValueId w, ValueId bias, int64_t stride, int64_t pad,
                        int64_t out_pad) {
  const Tensor& xv = val(x);
  const Tensor& wv = val(w);
  if (xv.ndim() != 4 || wv.ndim() != 4 || xv.dim(1) != wv.dim(0))
    throw std::invalid_argument("deconv2d: bad shapes " + xv.shape_str() + ", " + wv.shape_str());
  kernels::Deconv2dDims d{xv.dim(0), xv.dim(1), xv.dim(2), xv.dim(3),
                          wv.dim(1), wv.dim(2), wv.dim(3), stride, pad, out_pad};
  Tensor y({d.batch, d.out_ch, d.out_h(), d.out_w()});
  const double* bp = bias >= 0 ? val(bias).ptr() : nullptr;
  kernels::deconv2d_forward(d, xv.ptr(), wv.ptr(), bp, y.ptr());
  bool ng = needs_grad(x) || needs_grad(w) || (bias >= 0 && needs_grad(bias));
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, x, w, bias, d](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      if (g.needs_grad(x))
        kernels::deconv2d_grad_input(d, dy.ptr(), g.val(w).ptr(), g.grad_ref(x).ptr());
      bool need_w = g.needs_grad(w);
      bool need_b = bias >= 0 && g.needs_grad(bias);
      if (need_w || need_b)
        kernels::deconv2d_grad_weights(d, dy.ptr(), g.val(x).ptr(),
                                       need_w ? g.grad_ref(w).ptr() : nullptr,
                                       need_b ? g.grad_ref(bias).ptr() : nullptr);
    };
  return id;
}

ValueId Graph::add(ValueId a, ValueId b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  check_same_shape(av, bv, "add");
  Tensor y = av;
  for (int64_t i = 0; i < y.numel(); ++i) y[i] += bv[i];
  bool ng = needs_grad(a) || needs_grad(b);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a, b](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      if (g.needs_grad(a)) {
        Tensor& da = g.grad_ref(a);
        for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i];
      }
      if (g.needs_grad(b)) {
        Tensor& db = g.grad_ref(b);
        for (int64_t i = 0; i < dy.numel(); ++i) db[i] += dy[i];
      }
    };
  return id;
}

ValueId Graph::sub(ValueId a, ValueId b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  check_same_shape(av, bv, "sub");
  Tensor y = av;
  for (int64_t i = 0; i < y.numel(); ++i) y[i] -= bv[i];
  bool ng = needs_grad(a) || needs_grad(b);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a, b](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      if (g.needs_grad(a)) {
        Tensor& da = g.grad_ref(a);
        for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i];
      }
      if (g.needs_grad(b)) {
        Tensor& db = g.grad_ref(b);
        for (int64_t i = 0; i < dy.numel(); ++i) db[i] -= dy[i];
      }
    };
  return id;
}

ValueId Graph::mul(ValueId a, ValueId b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  check_same_shape(av, bv, "mul");
  Tensor y = av;
  for (int64_t i = 0; i < y.numel(); ++i) y[i] *= bv[i];
  bool ng = needs_grad(a) || needs_grad(b);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a, b](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      if (g.needs_grad(a)) {
        Tensor& da = g.grad_ref(a);
        const Tensor& bvv = g.val(b);
        for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i] * bvv[i];
      }
      if (g.needs_grad(b)) {
        Tensor& db = g.grad_ref(b);
        const Tensor& avv = g.val(a);
        for (int64_t i = 0; i < dy.numel(); ++i) db[i] += dy[i] * avv[i];
      }
    };
  return id;
}

ValueId Graph::add_rowvec(ValueId x, ValueId v) {
  const Tensor& xv = val(x);
  const Tensor& vv = val(v);
  if (xv.ndim() != 2 || vv.numel() != xv.dim(1))
    throw std::invalid_argument("add_rowvec: shape mismatch");
  int64_t m = xv.dim(0), n = xv.dim(1);
  Tensor y = xv;
  for (int64_t r = 0; r < m; ++r)
    for (int64_t c = 0; c < n; ++c) y[r * n + c] += vv[c];
  bool ng = needs_grad(x) || needs_grad(v);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, x, v, m, n](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      if (g.needs_grad(x)) {
        Tensor& dx = g.grad_ref(x);
        for (int64_t i = 0; i < dy.numel(); ++i) dx[i] += dy[i];
      }
      if (g.needs_grad(v)) {
        Tensor& dv = g.grad_ref(v);
        for (int64_t r = 0; r < m; ++r)
          for (int64_t c = 0; c < n; ++c) dv[c] += dy[r * n + c];
      }
    };
  return id;
}

ValueId Graph::mul_rowvec(ValueId x, ValueId v) {
  const Tensor& xv = val(x);
  const Tensor& vv = val(v);
  if (xv.ndim() != 2 || vv.numel() != xv.dim(1))
    throw std::invalid_argument("mul_rowvec: shape mismatch");
  int64_t m = xv.dim(0), n = xv.dim(1);
  Tensor y = xv;
  for (int64_t r = 0; r < m; ++r)
    for (int64_t c = 0; c < n; ++c) y[r * n + c] *= vv[c];
  bool ng = needs_grad(x) || needs_grad(v);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, x, v, m, n](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      if (g.needs_grad(x)) {
        Tensor& dx = g.grad_ref(x);
        const Tensor& vvv = g.val(v);
        for (int64_t r = 0; r < m; ++r)
          for (int64_t c = 0; c < n; ++c) dx[r * n + c] += dy[r * n + c] * vvv[c];
      }
      if (g.needs_grad(v)) {
        Tensor& dv = g.grad_ref(v);
        const Tensor& xvv = g.val(x);
        for (int64_t r = 0; r < m; ++r)
          for (int64_t c = 0; c < n; ++c) dv[c] += dy[r * n + c] * xvv[r * n + c];
      }
    };
  return id;
}

ValueId Graph::scale(ValueId a, double s) {
  const Tensor& av = val(a);
  Tensor y = av;
  for (auto& x : y.data) x *= s;
  bool ng = needs_grad(a);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a, s](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      Tensor& da = g.grad_ref(a);
      for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i] * s;
    };
  return id;
}

ValueId Graph::add_scalar(ValueId a, double s) {
  Tensor y = val(a);
  for (auto& x : y.data) x += s;
  bool ng = needs_grad(a);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      Tensor& da = g.grad_ref(a);
      for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i];
    };
  return id;
}

ValueId Graph::square(ValueId a) {
  Tensor y = val(a);
  for (auto& x : y.data) x *= x;
  bool ng = needs_grad(a);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      const Tensor& av = g.val(a);
      Tensor& da = g.grad_ref(a);
      for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i] * 2.0 * av[i];
    };
  return id;
}

ValueId Graph::tanh_op(ValueId a) {
  Tensor y = val(a);
  for (auto& x : y.data) x = std::tanh(x);
  bool ng = needs_grad(a);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      const Tensor& yv = g.val(id);
      Tensor& da = g.grad_ref(a);
      for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i] * (1.0 - yv[i] * yv[i]);
    };
  return id;
}

ValueId Graph::sigmoid(ValueId a) {
  Tensor y = val(a);
  for (auto& x : y.data) x = 1.0 / (1.0 + std::exp(-x));
  bool ng = needs_grad(a);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      const Tensor& yv = g.val(id);
      Tensor& da = g.grad_ref(a);
      for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i] * yv[i] * (1.0 - yv[i]);
    };
  return id;
}

ValueId Graph::exp_op(ValueId a) {
  Tensor y = val(a);
  for (auto& x : y.data) x = std::exp(x);
  bool ng = needs_grad(a);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      const Tensor& yv = g.val(id);
      Tensor& da = g.grad_ref(a);
      for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i] * yv[i];
    };
  return id;
}

ValueId Graph::log_op(ValueId a) {
  Tensor y = val(a);
  for (auto& x : y.data) x = std::log(x);
  bool ng = needs_grad(a);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      const Tensor& av = g.val(a);
      Tensor& da = g.grad_ref(a);
      for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i] / av[i];
    };
  return id;
}

ValueId Graph::softplus(ValueId a) {
  Tensor y = val(a);
  for (auto& x : y.data) x = x > 30.0 ? x : std::log1p(std::exp(x));
  bool ng = needs_grad(a);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      const Tensor& av = g.val(a);
      Tensor& da = g.grad_ref(a);
      for (int64_t i = 0; i < dy.numel(); ++i)
        da[i] += dy[i] / (1.0 + std::exp(-av[i]));
    };
  return id;
}

ValueId Graph::leaky_relu(ValueId a, double slope) {
  Tensor y = val(a);
  for (auto& x : y.data) x = x >= 0.0 ? x : slope * x;
  bool ng = needs_grad(a);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a, slope](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      const Tensor& av = g.val(a);
      Tensor& da = g.grad_ref(a);
      for (int64_t i = 0; i < dy.numel(); ++i)
        da[i] += dy[i] * (av[i] >= 0.0 ? 1.0 : slope);
    };
  return id;
}

ValueId Graph::reshape(ValueId a, std::vector<int64_t> shape) {
  const Tensor& av = val(a);
  if (Tensor::numel_of(shape) != av.numel())
    throw std::invalid_argument("reshape: element count mismatch");
  Tensor y(std::move(shape), av.data);
  bool ng = needs_grad(a);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      Tensor& da = g.grad_ref(a);
      for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i];
    };
  return id;
}

ValueId Graph::concat_cols(const std::vector<ValueId>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_cols: empty");
  int64_t m = val(xs[0]).dim(0);
  int64_t total = 0;
  bool ng = false;
  for (ValueId v : xs) {
    const Tensor& t = val(v);
    if (t.ndim() != 2 || t.dim(0) != m)
      throw std::invalid_argument("concat_cols: row mismatch");
    total += t.dim(1);
    ng = ng || needs_grad(v);
  }
  Tensor y({m, total});
  int64_t off = 0;
  for (ValueId v : xs) {
    const Tensor& t = val(v);
    int64_t n = t.dim(1);
    for (int64_t r = 0; r < m; ++r)
      for (int64_t c = 0; c < n; ++c) y[r * total + off + c] = t[r * n + c];
    off += n;
  }
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng) {
    std::vector<ValueId> parts = xs;
    nodes_.back().back = [id, parts, m, total](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      int64_t off2 = 0;
      for (ValueId v : parts) {
        int64_t n = g.val(v).dim(1);
        if (g.needs_grad(v)) {
          Tensor& dv = g.grad_ref(v);
          for (int64_t r = 0; r < m; ++r)
            for (int64_t c = 0; c < n; ++c) dv[r * n + c] += dy[r * total + off2 + c];
        }
        off2 += n;
      }
    };
  }
  return id;
}

ValueId Graph::slice_cols(ValueId a, int64_t c0, int64_t c1) {
  const Tensor& av = val(a);
  if (av.ndim() != 2 || c0 < 0 || c1 > av.dim(1) || c0 >= c1)
    throw std::invalid_argument("slice_cols: bad range");
  int64_t m = av.dim(0), n = av.dim(1), w = c1 - c0;
  Tensor y({m, w});
  for (int64_t r = 0; r < m; ++r)
    for (int64_t c = 0; c < w; ++c) y[r * w + c] = av[r * n + c0 + c];
  bool ng = needs_grad(a);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a, c0, m, n, w](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      Tensor& da = g.grad_ref(a);
      for (int64_t r = 0; r < m; ++r)
        for (int64_t c = 0; c < w; ++c) da[r * n + c0 + c] += dy[r * w + c];
    };
  return id;
}

ValueId Graph::row_sum(ValueId a) {
  const Tensor& av = val(a);
  if (av.ndim() != 2) throw std::invalid_argument("row_sum: need 2-d input");
  int64_t m = av.dim(0), n = av.dim(1);
  Tensor y({m, 1});
  for (int64_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (int64_t c = 0; c < n; ++c) s += av[r * n + c];
    y[r] = s;
  }
  bool ng = needs_grad(a);
  ValueId id = push(std::move(y), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a, m, n](Graph& g) {
      const Tensor& dy = g.grad_ref(id);
      Tensor& da = g.grad_ref(a);
      for (int64_t r = 0; r < m; ++r)
        for (int64_t c = 0; c < n; ++c) da[r * n + c] += dy[r];
    };
  return id;
}

ValueId Graph::sum_all(ValueId a) {
  const Tensor& av = val(a);
  double s = 0.0;
  for (double x : av.data) s += x;
  bool ng = needs_grad(a);
  ValueId id = push(Tensor::scalar(s), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a](Graph& g) {
      double d = g.grad_ref(id)[0];
      Tensor& da = g.grad_ref(a);
      for (int64_t i = 0; i < da.numel(); ++i) da[i] += d;
    };
  return id;
}

ValueId Graph::mean_all(ValueId a) {
  const Tensor& av = val(a);
  double s = 0.0;
  for (double x : av.data) s += x;
  double inv = 1.0 / static_cast<double>(av.numel());
  bool ng = needs_grad(a);
  ValueId id = push(Tensor::scalar(s * inv), ng, nullptr);
  if (ng)
    nodes_.back().back = [id, a, inv](Graph& g) {
      double d = g.grad_ref(id)[0] * inv;
      Tensor& da = g.grad_ref(a);
      for (int64_t i = 0; i < da.numel(); ++i) da[i] += d;
    };
  return id;
}

ValueId Graph::detach(ValueId a) { return push(val(a), false, nullptr); }

void Graph::backward(ValueId loss) {
  Node& ln = nodes_[static_cast<size_t>(loss)];
  if (ln.val.numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar");
  for (auto& n : nodes_)
    if (n.needs_grad) n.grad = Tensor::zeros(n.val.shape);
  if (!ln.needs_grad) return;  // constant loss: nothing to do
  ln.grad[0] = 1.0;
  for (int64_t i = static_cast<int64_t>(loss); i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.needs_grad && n.back) n.back(*this);
  }
}

}  // namespace rapid::nn
