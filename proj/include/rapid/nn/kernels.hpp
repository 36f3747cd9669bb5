#pragma once

#include <cstdint>

// Hot numeric kernels behind the autodiff graph. Each kernel has an
// OpenMP-parallel path and a serial reference path. The parallel loops are
// gather-form (every output element is produced by exactly one iteration,
// with a fixed inner summation order), so serial and parallel results are
// bit-identical for any thread count. Tests assert that equality and the
// bench target times the two paths against each other.
namespace rapid::nn::kernels {

// Process-wide switch; default on. Serial entry points ignore it.
bool& parallel_enabled();

// y[M,N] = x[M,K] * w[K,N]
void matmul(const double* x, const double* w, double* y, int64_t m, int64_t k, int64_t n);
void matmul_serial(const double* x, const double* w, double* y, int64_t m, int64_t k, int64_t n);

// dx[M,K] = dy[M,N] * w[K,N]^T   (accumulates into dx)
void matmul_grad_x(const double* dy, const double* w, double* dx, int64_t m, int64_t k, int64_t n);
void matmul_grad_x_serial(const double* dy, const double* w, double* dx, int64_t m, int64_t k, int64_t n);

// dw[K,N] += x[M,K]^T * dy[M,N]
void matmul_grad_w(const double* x, const double* dy, double* dw, int64_t m, int64_t k, int64_t n);
void matmul_grad_w_serial(const double* x, const double* dy, double* dw, int64_t m, int64_t k, int64_t n);

struct Conv2dDims {
  int64_t batch, in_ch, in_h, in_w;
  int64_t out_ch, kh, kw;
  int64_t stride, pad;
  int64_t out_h() const { return (in_h + 2 * pad - kh) / stride + 1; }
  int64_t out_w() const { return (in_w + 2 * pad - kw) / stride + 1; }
};

// x[B,C,H,W], w[OC,C,KH,KW], bias[OC] (may be null) -> y[B,OC,OH,OW]
void conv2d_forward(const Conv2dDims& d, const double* x, const double* w,
                    const double* bias, double* y);
void conv2d_forward_serial(const Conv2dDims& d, const double* x, const double* w,
                           const double* bias, double* y);

// accumulates into dx[B,C,H,W]
void conv2d_grad_input(const Conv2dDims& d, const double* dy, const double* w, double* dx);
void conv2d_grad_input_serial(const Conv2dDims& d, const double* dy, const double* w, double* dx);

// accumulates into dw[OC,C,KH,KW] and dbias[OC] (dbias may be null)
void conv2d_grad_weights(const Conv2dDims& d, const double* dy, const double* x,
                         double* dw, double* dbias);
void conv2d_grad_weights_serial(const Conv2dDims& d, const double* dy, const double* x,
                                double* dw, double* dbias);

struct Deconv2dDims {
  int64_t batch, in_ch, in_h, in_w;
  int64_t out_ch, kh, kw;
  int64_t stride, pad, out_pad;
  int64_t out_h() const { return (in_h - 1) * stride - 2 * pad + kh + out_pad; }
  int64_t out_w() const { return (in_w - 1) * stride - 2 * pad + kw + out_pad; }
};

// Transposed convolution. x[B,C,H,W], w[C,OC,KH,KW], bias[OC] -> y[B,OC,OH,OW]
void deconv2d_forward(const Deconv2dDims& d, const double* x, const double* w,
                      const double* bias, double* y);
void deconv2d_forward_serial(const Deconv2dDims& d, const double* x, const double* w,
                             const double* bias, double* y);

void deconv2d_grad_input(const Deconv2dDims& d, const double* dy, const double* w, double* dx);
void deconv2d_grad_input_serial(const Deconv2dDims& d, const double* dy, const double* w, double* dx);

void deconv2d_grad_weights(const Deconv2dDims& d, const double* dy, const double* x,
                           double* dw, double* dbias);
void deconv2d_grad_weights_serial(const Deconv2dDims& d, const double* dy, const double* x,
                                  double* dw, double* dbias);

}  // namespace rapid::nn::kernels
