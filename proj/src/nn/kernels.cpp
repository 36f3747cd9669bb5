#include "rapid/nn/kernels.hpp"

#include <algorithm>

namespace rapid::nn::kernels {

bool& parallel_enabled() {
  static bool on = true;
  return on;
}

namespace {

inline int64_t div_ceil(int64_t a, int64_t b) {
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}
inline int64_t div_floor(int64_t a, int64_t b) {
  return a >= 0 ? a / b : -div_ceil(-a, b);
}

// -------- matmul --------

inline void matmul_row(const double* x, const double* w, double* y,
                       int64_t k, int64_t n, int64_t row) {
  const double* xr = x + row * k;
  double* yr = y + row * n;
  std::fill(yr, yr + n, 0.0);
  for (int64_t kk = 0; kk < k; ++kk) {
    double xv = xr[kk];
    if (xv == 0.0) continue;
    const double* wr = w + kk * n;
    for (int64_t nn = 0; nn < n; ++nn) yr[nn] += xv * wr[nn];
  }
}

inline void matmul_gx_row(const double* dy, const double* w, double* dx,
                          int64_t k, int64_t n, int64_t row) {
  const double* dyr = dy + row * n;
  double* dxr = dx + row * k;
  for (int64_t kk = 0; kk < k; ++kk) {
    const double* wr = w + kk * n;
    double s = 0.0;
    for (int64_t nn = 0; nn < n; ++nn) s += dyr[nn] * wr[nn];
    dxr[kk] += s;
  }
}

inline void matmul_gw_row(const double* x, const double* dy, double* dw,
                          int64_t m, int64_t k, int64_t n, int64_t kk) {
  double* dwr = dw + kk * n;
  for (int64_t mm = 0; mm < m; ++mm) {
    double xv = x[mm * k + kk];
    if (xv == 0.0) continue;
    const double* dyr = dy + mm * n;
    for (int64_t nn = 0; nn < n; ++nn) dwr[nn] += xv * dyr[nn];
  }
}

// -------- conv2d --------

inline void conv2d_fwd_one(const Conv2dDims& d, const double* x, const double* w,
                           const double* bias, double* y, int64_t b, int64_t oc) {
  const int64_t oh = d.out_h(), ow = d.out_w();
  double* out = y + (b * d.out_ch + oc) * oh * ow;
  std::fill(out, out + oh * ow, bias ? bias[oc] : 0.0);
  for (int64_t c = 0; c < d.in_ch; ++c) {
    const double* xc = x + (b * d.in_ch + c) * d.in_h * d.in_w;
    const double* wc = w + (oc * d.in_ch + c) * d.kh * d.kw;
    for (int64_t ky = 0; ky < d.kh; ++ky) {
      int64_t oy0 = std::max<int64_t>(0, div_ceil(d.pad - ky, d.stride));
      int64_t oy1 = std::min(oh - 1, div_floor(d.in_h - 1 + d.pad - ky, d.stride));
      for (int64_t kx = 0; kx < d.kw; ++kx) {
        double wv = wc[ky * d.kw + kx];
        int64_t ox0 = std::max<int64_t>(0, div_ceil(d.pad - kx, d.stride));
        int64_t ox1 = std::min(ow - 1, div_floor(d.in_w - 1 + d.pad - kx, d.stride));
        for (int64_t oy = oy0; oy <= oy1; ++oy) {
          const double* xrow = xc + (oy * d.stride + ky - d.pad) * d.in_w + kx - d.pad;
          double* orow = out + oy * ow;
          if (d.stride == 1) {
            for (int64_t ox = ox0; ox <= ox1; ++ox) orow[ox] += wv * xrow[ox];
          } else {
            for (int64_t ox = ox0; ox <= ox1; ++ox) orow[ox] += wv * xrow[ox * d.stride];
          }
        }
      }
    }
  }
}

// Gather-form input gradient: every input pixel sums its own contributions.
inline void conv2d_gi_one(const Conv2dDims& d, const double* dy, const double* w,
                          double* dx, int64_t b, int64_t c) {
  const int64_t oh = d.out_h(), ow = d.out_w();
  double* dxc = dx + (b * d.in_ch + c) * d.in_h * d.in_w;
  for (int64_t iy = 0; iy < d.in_h; ++iy) {
    for (int64_t ix = 0; ix < d.in_w; ++ix) {
      double s = 0.0;
      for (int64_t oc = 0; oc < d.out_ch; ++oc) {
        const double* dyc = dy + (b * d.out_ch + oc) * oh * ow;
        const double* wc = w + (oc * d.in_ch + c) * d.kh * d.kw;
        for (int64_t ky = 0; ky < d.kh; ++ky) {
          int64_t num_y = iy + d.pad - ky;
          if (num_y % d.stride != 0) continue;
          int64_t oy = num_y / d.stride;
          if (oy < 0 || oy >= oh) continue;
          for (int64_t kx = 0; kx < d.kw; ++kx) {
            int64_t num_x = ix + d.pad - kx;
            if (num_x % d.stride != 0) continue;
            int64_t ox = num_x / d.stride;
            if (ox < 0 || ox >= ow) continue;
            s += wc[ky * d.kw + kx] * dyc[oy * ow + ox];
          }
        }
      }
      dxc[iy * d.in_w + ix] += s;
    }
  }
}

inline void conv2d_gw_one(const Conv2dDims& d, const double* dy, const double* x,
                          double* dw, int64_t oc, int64_t c) {
  const int64_t oh = d.out_h(), ow = d.out_w();
  double* dwc = dw + (oc * d.in_ch + c) * d.kh * d.kw;
  for (int64_t ky = 0; ky < d.kh; ++ky) {
    int64_t oy0 = std::max<int64_t>(0, div_ceil(d.pad - ky, d.stride));
    int64_t oy1 = std::min(oh - 1, div_floor(d.in_h - 1 + d.pad - ky, d.stride));
    for (int64_t kx = 0; kx < d.kw; ++kx) {
      int64_t ox0 = std::max<int64_t>(0, div_ceil(d.pad - kx, d.stride));
      int64_t ox1 = std::min(ow - 1, div_floor(d.in_w - 1 + d.pad - kx, d.stride));
      double s = 0.0;
      for (int64_t b = 0; b < d.batch; ++b) {
        const double* dyc = dy + (b * d.out_ch + oc) * oh * ow;
        const double* xc = x + (b * d.in_ch + c) * d.in_h * d.in_w;
        for (int64_t oy = oy0; oy <= oy1; ++oy) {
          const double* xrow = xc + (oy * d.stride + ky - d.pad) * d.in_w + kx - d.pad;
          const double* dyrow = dyc + oy * ow;
          if (d.stride == 1) {
            for (int64_t ox = ox0; ox <= ox1; ++ox) s += dyrow[ox] * xrow[ox];
          } else {
            for (int64_t ox = ox0; ox <= ox1; ++ox) s += dyrow[ox] * xrow[ox * d.stride];
          }
        }
      }
      dwc[ky * d.kw + kx] += s;
    }
  }
}

// -------- deconv2d (transposed conv) --------

// Forward is gather-form over output pixels (mirror of conv2d_gi_one).
inline void deconv2d_fwd_one(const Deconv2dDims& d, const double* x, const double* w,
                             const double* bias, double* y, int64_t b, int64_t oc) {
  const int64_t oh = d.out_h(), ow = d.out_w();
  double* out = y + (b * d.out_ch + oc) * oh * ow;
  for (int64_t oy = 0; oy < oh; ++oy) {
    for (int64_t ox = 0; ox < ow; ++ox) {
      double s = bias ? bias[oc] : 0.0;
      for (int64_t c = 0; c < d.in_ch; ++c) {
        const double* xc = x + (b * d.in_ch + c) * d.in_h * d.in_w;
        const double* wc = w + (c * d.out_ch + oc) * d.kh * d.kw;
        for (int64_t ky = 0; ky < d.kh; ++ky) {
          int64_t num_y = oy + d.pad - ky;
          if (num_y % d.stride != 0) continue;
          int64_t iy = num_y / d.stride;
          if (iy < 0 || iy >= d.in_h) continue;
          for (int64_t kx = 0; kx < d.kw; ++kx) {
            int64_t num_x = ox + d.pad - kx;
            if (num_x % d.stride != 0) continue;
            int64_t ix = num_x / d.stride;
            if (ix < 0 || ix >= d.in_w) continue;
            s += wc[ky * d.kw + kx] * xc[iy * d.in_w + ix];
          }
        }
      }
      out[oy * ow + ox] = s;
    }
  }
}

// Input gradient is a plain strided correlation of dy with w.
inline void deconv2d_gi_one(const Deconv2dDims& d, const double* dy, const double* w,
                            double* dx, int64_t b, int64_t c) {
  const int64_t oh = d.out_h(), ow = d.out_w();
  double* dxc = dx + (b * d.in_ch + c) * d.in_h * d.in_w;
  for (int64_t iy = 0; iy < d.in_h; ++iy) {
    for (int64_t ix = 0; ix < d.in_w; ++ix) {
      double s = 0.0;
      for (int64_t oc = 0; oc < d.out_ch; ++oc) {
        const double* dyc = dy + (b * d.out_ch + oc) * oh * ow;
        const double* wc = w + (c * d.out_ch + oc) * d.kh * d.kw;
        for (int64_t ky = 0; ky < d.kh; ++ky) {
          int64_t oy = iy * d.stride - d.pad + ky;
          if (oy < 0 || oy >= oh) continue;
          for (int64_t kx = 0; kx < d.kw; ++kx) {
            int64_t ox = ix * d.stride - d.pad + kx;
            if (ox < 0 || ox >= ow) continue;
            s += wc[ky * d.kw + kx] * dyc[oy * ow + ox];
          }
        }
      }
      dxc[iy * d.in_w + ix] += s;
    }
  }
}

inline void deconv2d_gw_one(const Deconv2dDims& d, const double* dy, const double* x,
                            double* dw, int64_t c, int64_t oc) {
  const int64_t oh = d.out_h(), ow = d.out_w();
  double* dwc = dw + (c * d.out_ch + oc) * d.kh * d.kw;
  for (int64_t ky = 0; ky < d.kh; ++ky) {
    for (int64_t kx = 0; kx < d.kw; ++kx) {
      double s = 0.0;
      for (int64_t b = 0; b < d.batch; ++b) {
        const double* dyc = dy + (b * d.out_ch + oc) * oh * ow;
        const double* xc = x + (b * d.in_ch + c) * d.in_h * d.in_w;
        for (int64_t iy = 0; iy < d.in_h; ++iy) {
          int64_t oy = iy * d.stride - d.pad + ky;
          if (oy < 0 || oy >= oh) continue;
          for (int64_t ix = 0; ix < d.in_w; ++ix) {
            int64_t ox = ix * d.stride - d.pad + kx;
            if (ox < 0 || ox >= ow) continue;
            s += xc[iy * d.in_w + ix] * dyc[oy * ow + ox];
          }
        }
      }
      dwc[ky * d.kw + kx] += s;
    }
  }
}

}  // namespace

#define RAPID_PAR_LOOP(count, body)                \
  do {                                             \
    const int64_t n_ = (count);                    \
    if (parallel_enabled()) {                      \
      _Pragma("omp parallel for schedule(static)") \
      for (int64_t i_ = 0; i_ < n_; ++i_) body(i_);\
    } else {                                       \
      for (int64_t i_ = 0; i_ < n_; ++i_) body(i_);\
    }                                              \
  } while (0)

#define RAPID_SER_LOOP(count, body)                 \
  do {                                              \
    const int64_t n_ = (count);                     \
    for (int64_t i_ = 0; i_ < n_; ++i_) body(i_);   \
  } while (0)

void matmul(const double* x, const double* w, double* y, int64_t m, int64_t k, int64_t n) {
  auto body = [&](int64_t i) { matmul_row(x, w, y, k, n, i); };
  RAPID_PAR_LOOP(m, body);
}
void matmul_serial(const double* x, const double* w, double* y, int64_t m, int64_t k, int64_t n) {
  auto body = [&](int64_t i) { matmul_row(x, w, y, k, n, i); };
  RAPID_SER_LOOP(m, body);
}

void matmul_grad_x(const double* dy, const double* w, double* dx, int64_t m, int64_t k, int64_t n) {
  auto body = [&](int64_t i) { matmul_gx_row(dy, w, dx, k, n, i); };
  RAPID_PAR_LOOP(m, body);
}
void matmul_grad_x_serial(const double* dy, const double* w, double* dx, int64_t m, int64_t k, int64_t n) {
  auto body = [&](int64_t i) { matmul_gx_row(dy, w, dx, k, n, i); };
  RAPID_SER_LOOP(m, body);
}

void matmul_grad_w(const double* x, const double* dy, double* dw, int64_t m, int64_t k, int64_t n) {
  auto body = [&](int64_t i) { matmul_gw_row(x, dy, dw, m, k, n, i); };
  RAPID_PAR_LOOP(k, body);
}
void matmul_grad_w_serial(const double* x, const double* dy, double* dw, int64_t m, int64_t k, int64_t n) {
  auto body = [&](int64_t i) { matmul_gw_row(x, dy, dw, m, k, n, i); };
  RAPID_SER_LOOP(k, body);
}

void conv2d_forward(const Conv2dDims& d, const double* x, const double* w,
                    const double* bias, double* y) {
  auto body = [&](int64_t i) { conv2d_fwd_one(d, x, w, bias, y, i / d.out_ch, i % d.out_ch); };
  RAPID_PAR_LOOP(d.batch * d.out_ch, body);
}
void conv2d_forward_serial(const Conv2dDims& d, const double* x, const double* w,
                           const double* bias, double* y) {
  auto body = [&](int64_t i) { conv2d_fwd_one(d, x, w, bias, y, i / d.out_ch, i % d.out_ch); };
  RAPID_SER_LOOP(d.batch * d.out_ch, body);
}

void conv2d_grad_input(const Conv2dDims& d, const double* dy, const double* w, double* dx) {
  auto body = [&](int64_t i) { conv2d_gi_one(d, dy, w, dx, i / d.in_ch, i % d.in_ch); };
  RAPID_PAR_LOOP(d.batch * d.in_ch, body);
}
void conv2d_grad_input_serial(const Conv2dDims& d, const double* dy, const double* w, double* dx) {
  auto body = [&](int64_t i) { conv2d_gi_one(d, dy, w, dx, i / d.in_ch, i % d.in_ch); };
  RAPID_SER_LOOP(d.batch * d.in_ch, body);
}

static void conv2d_grad_bias(const Conv2dDims& d, const double* dy, double* dbias) {
  if (!dbias) return;
  const int64_t plane = d.out_h() * d.out_w();
  for (int64_t oc = 0; oc < d.out_ch; ++oc) {
    double s = 0.0;
    for (int64_t b = 0; b < d.batch; ++b) {
      const double* p = dy + (b * d.out_ch + oc) * plane;
      for (int64_t i = 0; i < plane; ++i) s += p[i];
    }
    dbias[oc] += s;
  }
}

void conv2d_grad_weights(const Conv2dDims& d, const double* dy, const double* x,
                         double* dw, double* dbias) {
  auto body = [&](int64_t i) { conv2d_gw_one(d, dy, x, dw, i / d.in_ch, i % d.in_ch); };
  RAPID_PAR_LOOP(d.out_ch * d.in_ch, body);
  conv2d_grad_bias(d, dy, dbias);
}
void conv2d_grad_weights_serial(const Conv2dDims& d, const double* dy, const double* x,
                                double* dw, double* dbias) {
  auto body = [&](int64_t i) { conv2d_gw_one(d, dy, x, dw, i / d.in_ch, i % d.in_ch); };
  RAPID_SER_LOOP(d.out_ch * d.in_ch, body);
  conv2d_grad_bias(d, dy, dbias);
}

void deconv2d_forward(const Deconv2dDims& d, const double* x, const double* w,
                      const double* bias, double* y) {
  auto body = [&](int64_t i) { deconv2d_fwd_one(d, x, w, bias, y, i / d.out_ch, i % d.out_ch); };
  RAPID_PAR_LOOP(d.batch * d.out_ch, body);
}
void deconv2d_forward_serial(const Deconv2dDims& d, const double* x, const double* w,
                             const double* bias, double* y) {
  auto body = [&](int64_t i) { deconv2d_fwd_one(d, x, w, bias, y, i / d.out_ch, i % d.out_ch); };
  RAPID_SER_LOOP(d.batch * d.out_ch, body);
}

void deconv2d_grad_input(const Deconv2dDims& d, const double* dy, const double* w, double* dx) {
  auto body = [&](int64_t i) { deconv2d_gi_one(d, dy, w, dx, i / d.in_ch, i % d.in_ch); };
  RAPID_PAR_LOOP(d.batch * d.in_ch, body);
}
void deconv2d_grad_input_serial(const Deconv2dDims& d, const double* dy, const double* w, double* dx) {
  auto body = [&](int64_t i) { deconv2d_gi_one(d, dy, w, dx, i / d.in_ch, i % d.in_ch); };
  RAPID_SER_LOOP(d.batch * d.in_ch, body);
}

static void deconv2d_grad_bias(const Deconv2dDims& d, const double* dy, double* dbias) {
  if (!dbias) return;
  const int64_t plane = d.out_h() * d.out_w();
  for (int64_t oc = 0; oc < d.out_ch; ++oc) {
    double s = 0.0;
    for (int64_t b = 0; b < d.batch; ++b) {
      const double* p = dy + (b * d.out_ch + oc) * plane;
      for (int64_t i = 0; i < plane; ++i) s += p[i];
    }
    dbias[oc] += s;
  }
}

void deconv2d_grad_weights(const Deconv2dDims& d, const double* dy, const double* x,
                           double* dw, double* dbias) {
  auto body = [&](int64_t i) { deconv2d_gw_one(d, dy, x, dw, i / d.out_ch, i % d.out_ch); };
  RAPID_PAR_LOOP(d.in_ch * d.out_ch, body);
  deconv2d_grad_bias(d, dy, dbias);
}
void deconv2d_grad_weights_serial(const Deconv2dDims& d, const double* dy, const double* x,
                                  double* dw, double* dbias) {
  auto body = [&](int64_t i) { deconv2d_gw_one(d, dy, x, dw, i / d.out_ch, i % d.out_ch); };
  RAPID_SER_LOOP(d.in_ch * d.out_ch, body);
  deconv2d_grad_bias(d, dy, dbias);
}

}  // namespace rapid::nn::kernels
