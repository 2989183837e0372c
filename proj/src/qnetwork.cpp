#include "rlx/qnetwork.hpp"

#include <algorithm>
#include <cmath>
#if defined(__AVX512F__)
#include <immintrin.h>
#endif

#include "rlx/error.hpp"

namespace rlx {
namespace {

// Dot product with 32 independent accumulator lanes (four 8-wide vector
// registers, so consecutive FMAs do not stall on each other). The lane loop
// auto-vectorizes, and the fixed reduction order keeps results bit-identical
// across runs (no -ffast-math anywhere in this project).
double dot(const double* a, const double* b, int n) {
  constexpr int kLanes = 32;
  double lanes[kLanes] = {};
  int i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (int j = 0; j < kLanes; ++j) lanes[j] += a[i + j] * b[i + j];
  }
  for (int j = 0; i < n; ++i, ++j) lanes[j] += a[i] * b[i];
  for (int stride = kLanes / 2; stride > 0; stride /= 2) {
    for (int j = 0; j < stride; ++j) lanes[j] += lanes[j + stride];
  }
  return lanes[0];
}

void axpy(double alpha, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// ------------------------------------------------------------------ conv
//
// The 3x3 convolutions run over im2col patch rows: one row of in_ch * 9
// doubles per output position, matching the weight layout of a filter, so
// forward is a plain dot per (filter, position) and the backward passes are
// axpys over the same rows. This trades a small gather per call for long
// contiguous kernels; positions are always processed in ascending order, so
// results stay bit-identical across runs and thread counts.

// P gets H*W rows of L.in_ch * 9 values (zero outside the grid).
void im2col(const double* in, int in_ch, int H, int W, double* P) {
  const int hw = H * W;
  const int row_len = in_ch * 9;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double* row = P + (y * W + x) * row_len;
      for (int c = 0; c < in_ch; ++c) {
        const double* in_c = in + c * hw;
        double* cell = row + c * 9;
        for (int dy = 0; dy < 3; ++dy) {
          const int sy = y + dy - 1;
          if (sy < 0 || sy >= H) {
            cell[dy * 3 + 0] = cell[dy * 3 + 1] = cell[dy * 3 + 2] = 0.0;
            continue;
          }
          const double* src = in_c + sy * W + x - 1;
          cell[dy * 3 + 0] = x > 0 ? src[0] : 0.0;
          cell[dy * 3 + 1] = src[1];
          cell[dy * 3 + 2] = x + 1 < W ? src[2] : 0.0;
        }
      }
    }
  }
}

double* patch_buffer(int n) {
  thread_local std::vector<double> buf;
  if (buf.size() < static_cast<size_t>(n)) buf.resize(static_cast<size_t>(n));
  return buf.data();
}

// out_T[p][k] = b[k] + sum_i w[k][i] * P[p][i], accumulated as rank-1
// updates over i so the 16 output channels live in two vector registers and
// no horizontal reduction is needed. w_T is the in-major transpose of the
// filter bank. Summation order over i is ascending and fixed; the explicit
// AVX-512 path computes the same sums in the same order as the scalar one.
#if defined(__AVX512F__)
void conv_gemm_rows16(const double* __restrict P, const double* __restrict w_T,
                      const double* __restrict bias, int positions,
                      int row_len, double* __restrict out_T) {
  const __m512d b0 = _mm512_loadu_pd(bias);
  const __m512d b1 = _mm512_loadu_pd(bias + 8);
  for (int p = 0; p < positions; ++p) {
    const double* row = P + static_cast<size_t>(p) * row_len;
    __m512d acc0 = b0, acc1 = b1;
    const double* wt = w_T;
    int i = 0;
    for (; i + 2 <= row_len; i += 2, wt += 32) {
      const __m512d v0 = _mm512_set1_pd(row[i]);
      acc0 = _mm512_fmadd_pd(v0, _mm512_loadu_pd(wt), acc0);
      acc1 = _mm512_fmadd_pd(v0, _mm512_loadu_pd(wt + 8), acc1);
      const __m512d v1 = _mm512_set1_pd(row[i + 1]);
      acc0 = _mm512_fmadd_pd(v1, _mm512_loadu_pd(wt + 16), acc0);
      acc1 = _mm512_fmadd_pd(v1, _mm512_loadu_pd(wt + 24), acc1);
    }
    for (; i < row_len; ++i, wt += 16) {
      const __m512d v = _mm512_set1_pd(row[i]);
      acc0 = _mm512_fmadd_pd(v, _mm512_loadu_pd(wt), acc0);
      acc1 = _mm512_fmadd_pd(v, _mm512_loadu_pd(wt + 8), acc1);
    }
    double* out_row = out_T + static_cast<size_t>(p) * 16;
    _mm512_storeu_pd(out_row, acc0);
    _mm512_storeu_pd(out_row + 8, acc1);
  }
}
#else
void conv_gemm_rows16(const double* __restrict P, const double* __restrict w_T,
                      const double* __restrict bias, int positions,
                      int row_len, double* __restrict out_T) {
  for (int p = 0; p < positions; ++p) {
    const double* row = P + static_cast<size_t>(p) * row_len;
    double acc[16];
    for (int k = 0; k < 16; ++k) acc[k] = bias[k];
    for (int i = 0; i < row_len; ++i) {
      const double v = row[i];
      const double* wt = w_T + static_cast<size_t>(i) * 16;
      for (int k = 0; k < 16; ++k) acc[k] += v * wt[k];
    }
    double* out_row = out_T + static_cast<size_t>(p) * 16;
    for (int k = 0; k < 16; ++k) out_row[k] = acc[k];
  }
}
#endif

void conv_forward(const Conv3x3& L, const double* in, double* out, int H,
                  int W) {
  const int hw = H * W;
  const int row_len = L.in_ch * 9;
  double* P = patch_buffer(hw * row_len);
  im2col(in, L.in_ch, H, W, P);

  thread_local std::vector<double> w_T, out_T;
  w_T.resize(static_cast<size_t>(row_len) * L.out_ch);
  out_T.resize(static_cast<size_t>(hw) * L.out_ch);
  for (int k = 0; k < L.out_ch; ++k) {
    for (int i = 0; i < row_len; ++i) {
      w_T[static_cast<size_t>(i) * L.out_ch + k] =
          L.w[static_cast<size_t>(k) * row_len + i];
    }
  }
  if (L.out_ch != 16) throw ShapeMismatchError("conv_forward: out_ch != 16");
  conv_gemm_rows16(P, w_T.data(), L.b.data(), hw, row_len, out_T.data());
  for (int k = 0; k < L.out_ch; ++k) {
    double* out_k = out + k * hw;
    for (int p = 0; p < hw; ++p) {
      out_k[p] = out_T[static_cast<size_t>(p) * L.out_ch + k];
    }
  }
}

// dL/din given dL/dout; din must be zero-filled by the caller.
void conv_backward_input(const Conv3x3& L, const double* dout, double* din,
                         int H, int W) {
  const int hw = H * W;
  const int row_len = L.in_ch * 9;
  // dP row per position, then scatter back to the input cells the patch
  // was gathered from (col2im).
  thread_local std::vector<double> dp_row;
  dp_row.assign(static_cast<size_t>(row_len), 0.0);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const int p = y * W + x;
      std::fill(dp_row.begin(), dp_row.end(), 0.0);
      for (int k = 0; k < L.out_ch; ++k) {
        axpy(dout[k * hw + p], L.w.data() + static_cast<size_t>(k) * row_len,
             dp_row.data(), row_len);
      }
      for (int c = 0; c < L.in_ch; ++c) {
        double* din_c = din + c * hw;
        const double* cell = dp_row.data() + c * 9;
        for (int dy = 0; dy < 3; ++dy) {
          const int sy = y + dy - 1;
          if (sy < 0 || sy >= H) continue;
          double* dst = din_c + sy * W + x - 1;
          if (x > 0) dst[0] += cell[dy * 3 + 0];
          dst[1] += cell[dy * 3 + 1];
          if (x + 1 < W) dst[2] += cell[dy * 3 + 2];
        }
      }
    }
  }
}

void conv_backward_params(const Conv3x3& L, const double* in,
                          const double* dout, double* dw, double* db, int H,
                          int W) {
  const int hw = H * W;
  const int row_len = L.in_ch * 9;
  double* P = patch_buffer(hw * row_len);
  im2col(in, L.in_ch, H, W, P);
#if defined(__AVX512F__)
  if (L.out_ch == 16) {
    // dw_T[i][k] += sum_p P[p][i] * dout[k][p], with the 16 channels of one
    // tap row updated by two fused multiply-adds; position order is
    // ascending, so sums are deterministic.
    thread_local std::vector<double> dout_T, dw_T;
    dout_T.resize(static_cast<size_t>(hw) * 16);
    dw_T.assign(static_cast<size_t>(row_len) * 16, 0.0);
    for (int k = 0; k < 16; ++k) {
      for (int p = 0; p < hw; ++p) {
        dout_T[static_cast<size_t>(p) * 16 + k] = dout[k * hw + p];
      }
    }
    for (int p = 0; p < hw; ++p) {
      const double* row = P + static_cast<size_t>(p) * row_len;
      const double* dr = dout_T.data() + static_cast<size_t>(p) * 16;
      const __m512d d0 = _mm512_loadu_pd(dr);
      const __m512d d1 = _mm512_loadu_pd(dr + 8);
      for (int i = 0; i < row_len; ++i) {
        double* dwt = dw_T.data() + static_cast<size_t>(i) * 16;
        const __m512d v = _mm512_set1_pd(row[i]);
        _mm512_storeu_pd(dwt, _mm512_fmadd_pd(v, d0, _mm512_loadu_pd(dwt)));
        _mm512_storeu_pd(dwt + 8,
                         _mm512_fmadd_pd(v, d1, _mm512_loadu_pd(dwt + 8)));
      }
    }
    for (int k = 0; k < 16; ++k) {
      double* dw_k = dw + static_cast<size_t>(k) * row_len;
      for (int i = 0; i < row_len; ++i) {
        dw_k[i] += dw_T[static_cast<size_t>(i) * 16 + k];
      }
      const double* dout_k = dout + k * hw;
      double bsum = 0.0;
      for (int p = 0; p < hw; ++p) bsum += dout_k[p];
      db[k] += bsum;
    }
    return;
  }
#endif
  for (int k = 0; k < L.out_ch; ++k) {
    const double* dout_k = dout + k * hw;
    double* dw_k = dw + static_cast<size_t>(k) * row_len;
    double bsum = 0.0;
    for (int p = 0; p < hw; ++p) {
      axpy(dout_k[p], P + p * row_len, dw_k, row_len);
      bsum += dout_k[p];
    }
    db[k] += bsum;
  }
}

void relu_forward(const double* pre, double* act, int n) {
  for (int i = 0; i < n; ++i) act[i] = pre[i] > 0.0 ? pre[i] : 0.0;
}

// dpre = dact * (pre > 0), in place over dact.
void relu_backward(const double* pre, double* d, int n) {
  for (int i = 0; i < n; ++i) d[i] = pre[i] > 0.0 ? d[i] : 0.0;
}

void dense_forward(const Dense& L, const double* in, double* out) {
  for (int o = 0; o < L.out_dim; ++o) {
    out[o] = L.b[static_cast<size_t>(o)] +
             dot(L.w.data() + static_cast<size_t>(o) * L.in_dim, in, L.in_dim);
  }
}

// din must be zero-filled by the caller.
void dense_backward_input(const Dense& L, const double* dout, double* din) {
  for (int o = 0; o < L.out_dim; ++o) {
    axpy(dout[o], L.w.data() + static_cast<size_t>(o) * L.in_dim, din,
         L.in_dim);
  }
}

void dense_backward_params(const Dense& L, const double* in,
                           const double* dout, double* dw, double* db) {
  for (int o = 0; o < L.out_dim; ++o) {
    axpy(dout[o], in, dw + static_cast<size_t>(o) * L.in_dim, L.in_dim);
    db[o] += dout[o];
  }
}

// --------------------------------------------------------- batched dense
//
// The batched dense kernels block the input dimension so one weight slice
// stays cache-hot while every sample in the batch consumes it; the weight
// matrix is then streamed once per batch instead of once per sample (fc1 is
// otherwise memory-bound). Partial sums accumulate over ascending blocks
// and ascending samples, so results are deterministic.

constexpr int kDenseBlock = 512;

void dense_forward_batch(const Dense& L, const double* A, int B, double* H) {
  for (int b = 0; b < B; ++b) {
    double* h = H + static_cast<size_t>(b) * L.out_dim;
    for (int o = 0; o < L.out_dim; ++o) h[o] = L.b[static_cast<size_t>(o)];
  }
  for (int i0 = 0; i0 < L.in_dim; i0 += kDenseBlock) {
    const int len = std::min(kDenseBlock, L.in_dim - i0);
    for (int o = 0; o < L.out_dim; ++o) {
      const double* w = L.w.data() + static_cast<size_t>(o) * L.in_dim + i0;
      for (int b = 0; b < B; ++b) {
        H[static_cast<size_t>(b) * L.out_dim + o] +=
            dot(w, A + static_cast<size_t>(b) * L.in_dim + i0, len);
      }
    }
  }
}

// din must be zero-filled by the caller.
void dense_backward_input_batch(const Dense& L, const double* dout, int B,
                                double* din) {
  for (int i0 = 0; i0 < L.in_dim; i0 += kDenseBlock) {
    const int len = std::min(kDenseBlock, L.in_dim - i0);
    for (int o = 0; o < L.out_dim; ++o) {
      const double* w = L.w.data() + static_cast<size_t>(o) * L.in_dim + i0;
      for (int b = 0; b < B; ++b) {
        axpy(dout[static_cast<size_t>(b) * L.out_dim + o], w,
             din + static_cast<size_t>(b) * L.in_dim + i0, len);
      }
    }
  }
}

void dense_backward_params_batch(const Dense& L, const double* A,
                                 const double* dout, int B, double* dw,
                                 double* db) {
  for (int i0 = 0; i0 < L.in_dim; i0 += kDenseBlock) {
    const int len = std::min(kDenseBlock, L.in_dim - i0);
    for (int o = 0; o < L.out_dim; ++o) {
      double* dwrow = dw + static_cast<size_t>(o) * L.in_dim + i0;
      for (int b = 0; b < B; ++b) {
        axpy(dout[static_cast<size_t>(b) * L.out_dim + o],
             A + static_cast<size_t>(b) * L.in_dim + i0, dwrow, len);
      }
    }
  }
  for (int o = 0; o < L.out_dim; ++o) {
    double acc = 0.0;
    for (int b = 0; b < B; ++b) {
      acc += dout[static_cast<size_t>(b) * L.out_dim + o];
    }
    db[o] += acc;
  }
}

void kaiming_uniform(std::vector<double>& w, int fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / fan_in);
  for (double& v : w) v = rng.uniform(-bound, bound);
}

// Backward chain shared by input and parameter gradients: deltas at the
// pre-activation of fc1, conv2 and conv1.
struct Deltas {
  std::vector<double> fc1_pre;    // kHidden
  std::vector<double> conv2_pre;  // 16*H*W
  std::vector<double> conv1_pre;  // 16*H*W
};

void backprop_deltas(const QNetwork& net, const ForwardTrace& trace,
                     std::span<const double> dq, Deltas& d) {
  const int conv_n = net.conv_size();
  d.fc1_pre.assign(QNetwork::kHidden, 0.0);
  d.conv2_pre.assign(static_cast<size_t>(conv_n), 0.0);
  d.conv1_pre.assign(static_cast<size_t>(conv_n), 0.0);

  dense_backward_input(net.fc2, dq.data(), d.fc1_pre.data());
  relu_backward(trace.fc1_pre.data(), d.fc1_pre.data(), QNetwork::kHidden);

  dense_backward_input(net.fc1, d.fc1_pre.data(), d.conv2_pre.data());
  relu_backward(trace.conv2_pre.data(), d.conv2_pre.data(), conv_n);

  conv_backward_input(net.conv2, d.conv2_pre.data(), d.conv1_pre.data(),
                      net.height, net.width);
  relu_backward(trace.conv1_pre.data(), d.conv1_pre.data(), conv_n);
}

}  // namespace

// -------------------------------------------------------------- QNetwork

QNetwork QNetwork::init(int width, int height, Rng& rng) {
  if (width < 3 || height < 3) {
    throw ShapeMismatchError("QNetwork::init: grid must be at least 3x3");
  }
  QNetwork net;
  net.width = width;
  net.height = height;

  net.conv1.in_ch = kStateChannels;
  net.conv1.out_ch = kConvChannels;
  net.conv1.w.assign(static_cast<size_t>(kConvChannels) * kStateChannels * 9, 0.0);
  net.conv1.b.assign(kConvChannels, 0.0);

  net.conv2.in_ch = kConvChannels;
  net.conv2.out_ch = kConvChannels;
  net.conv2.w.assign(static_cast<size_t>(kConvChannels) * kConvChannels * 9, 0.0);
  net.conv2.b.assign(kConvChannels, 0.0);

  net.fc1.in_dim = net.conv_size();
  net.fc1.out_dim = kHidden;
  net.fc1.w.assign(static_cast<size_t>(kHidden) * net.fc1.in_dim, 0.0);
  net.fc1.b.assign(kHidden, 0.0);

  net.fc2.in_dim = kHidden;
  net.fc2.out_dim = kNumActions;
  net.fc2.w.assign(static_cast<size_t>(kNumActions) * kHidden, 0.0);
  net.fc2.b.assign(kNumActions, 0.0);

  kaiming_uniform(net.conv1.w, kStateChannels * 9, rng);
  kaiming_uniform(net.conv2.w, kConvChannels * 9, rng);
  kaiming_uniform(net.fc1.w, net.fc1.in_dim, rng);
  kaiming_uniform(net.fc2.w, net.fc2.in_dim, rng);
  return net;
}

namespace {

template <typename Net>
std::vector<ParamView> make_views(Net& net) {
  auto view = [](const char* name, std::vector<int> shape, auto& vec) {
    ParamView v;
    v.name = name;
    v.shape = std::move(shape);
    v.data = const_cast<double*>(vec.data());
    v.size = vec.size();
    return v;
  };
  std::vector<ParamView> out;
  out.push_back(view("conv1.w", {net.conv1.out_ch, net.conv1.in_ch, 3, 3},
                     net.conv1.w));
  out.push_back(view("conv1.b", {net.conv1.out_ch}, net.conv1.b));
  out.push_back(view("conv2.w", {net.conv2.out_ch, net.conv2.in_ch, 3, 3},
                     net.conv2.w));
  out.push_back(view("conv2.b", {net.conv2.out_ch}, net.conv2.b));
  out.push_back(view("fc1.w", {net.fc1.out_dim, net.fc1.in_dim}, net.fc1.w));
  out.push_back(view("fc1.b", {net.fc1.out_dim}, net.fc1.b));
  out.push_back(view("fc2.w", {net.fc2.out_dim, net.fc2.in_dim}, net.fc2.w));
  out.push_back(view("fc2.b", {net.fc2.out_dim}, net.fc2.b));
  return out;
}

}  // namespace

std::vector<ParamView> QNetwork::param_views() { return make_views(*this); }
std::vector<ParamView> QNetwork::param_views() const {
  return make_views(*this);
}

size_t QNetwork::param_count() const {
  size_t n = 0;
  for (const ParamView& v : param_views()) n += v.size;
  return n;
}

Gradients Gradients::zeros_like(const QNetwork& net) {
  Gradients g;
  g.conv1_w.assign(net.conv1.w.size(), 0.0);
  g.conv1_b.assign(net.conv1.b.size(), 0.0);
  g.conv2_w.assign(net.conv2.w.size(), 0.0);
  g.conv2_b.assign(net.conv2.b.size(), 0.0);
  g.fc1_w.assign(net.fc1.w.size(), 0.0);
  g.fc1_b.assign(net.fc1.b.size(), 0.0);
  g.fc2_w.assign(net.fc2.w.size(), 0.0);
  g.fc2_b.assign(net.fc2.b.size(), 0.0);
  return g;
}

void Gradients::clear() {
  for (auto& [name, span] : views()) {
    std::fill(span.begin(), span.end(), 0.0);
  }
}

std::vector<std::pair<std::string, std::span<double>>> Gradients::views() {
  return {
      {"conv1.w", conv1_w}, {"conv1.b", conv1_b}, {"conv2.w", conv2_w},
      {"conv2.b", conv2_b}, {"fc1.w", fc1_w},     {"fc1.b", fc1_b},
      {"fc2.w", fc2_w},     {"fc2.b", fc2_b},
  };
}

// --------------------------------------------------------------- forward

void forward(const QNetwork& net, std::span<const double> input,
             ForwardTrace& trace) {
  if (static_cast<int>(input.size()) != net.input_size()) {
    throw ShapeMismatchError("forward: input size mismatch");
  }
  const int conv_n = net.conv_size();
  trace.input.assign(input.begin(), input.end());
  trace.conv1_pre.resize(static_cast<size_t>(conv_n));
  trace.conv1_act.resize(static_cast<size_t>(conv_n));
  trace.conv2_pre.resize(static_cast<size_t>(conv_n));
  trace.conv2_act.resize(static_cast<size_t>(conv_n));
  trace.fc1_pre.resize(QNetwork::kHidden);
  trace.fc1_act.resize(QNetwork::kHidden);

  conv_forward(net.conv1, trace.input.data(), trace.conv1_pre.data(),
               net.height, net.width);
  relu_forward(trace.conv1_pre.data(), trace.conv1_act.data(), conv_n);
  conv_forward(net.conv2, trace.conv1_act.data(), trace.conv2_pre.data(),
               net.height, net.width);
  relu_forward(trace.conv2_pre.data(), trace.conv2_act.data(), conv_n);
  dense_forward(net.fc1, trace.conv2_act.data(), trace.fc1_pre.data());
  relu_forward(trace.fc1_pre.data(), trace.fc1_act.data(), QNetwork::kHidden);
  double q[kNumActions];
  dense_forward(net.fc2, trace.fc1_act.data(), q);
  std::copy(q, q + kNumActions, trace.q.begin());
}

std::array<double, kNumActions> forward(const QNetwork& net,
                                        std::span<const double> input) {
  thread_local ForwardTrace trace;
  forward(net, input, trace);
  return trace.q;
}

void backward_input(const QNetwork& net, const ForwardTrace& trace,
                    std::span<const double> dq, std::span<double> dinput) {
  if (static_cast<int>(dinput.size()) != net.input_size()) {
    throw ShapeMismatchError("backward_input: output size mismatch");
  }
  thread_local Deltas d;
  backprop_deltas(net, trace, dq, d);
  std::fill(dinput.begin(), dinput.end(), 0.0);
  conv_backward_input(net.conv1, d.conv1_pre.data(), dinput.data(), net.height,
                      net.width);
}

void backward_params(const QNetwork& net, const ForwardTrace& trace,
                     std::span<const double> dq, Gradients& grads) {
  thread_local Deltas d;
  backprop_deltas(net, trace, dq, d);
  dense_backward_params(net.fc2, trace.fc1_act.data(), dq.data(),
                        grads.fc2_w.data(), grads.fc2_b.data());
  dense_backward_params(net.fc1, trace.conv2_act.data(), d.fc1_pre.data(),
                        grads.fc1_w.data(), grads.fc1_b.data());
  conv_backward_params(net.conv2, trace.conv1_act.data(), d.conv2_pre.data(),
                       grads.conv2_w.data(), grads.conv2_b.data(), net.height,
                       net.width);
  conv_backward_params(net.conv1, trace.input.data(), d.conv1_pre.data(),
                       grads.conv1_w.data(), grads.conv1_b.data(), net.height,
                       net.width);
}

// ----------------------------------------------------------------- batch

void forward_batch(const QNetwork& net, std::span<const double> inputs,
                   int batch, BatchTrace& trace) {
  const int in_n = net.input_size();
  const int conv_n = net.conv_size();
  if (static_cast<int>(inputs.size()) != batch * in_n) {
    throw ShapeMismatchError("forward_batch: input size mismatch");
  }
  trace.batch = batch;
  trace.input.assign(inputs.begin(), inputs.end());
  trace.conv1_pre.resize(static_cast<size_t>(batch) * conv_n);
  trace.conv1_act.resize(static_cast<size_t>(batch) * conv_n);
  trace.conv2_pre.resize(static_cast<size_t>(batch) * conv_n);
  trace.conv2_act.resize(static_cast<size_t>(batch) * conv_n);
  trace.fc1_pre.resize(static_cast<size_t>(batch) * QNetwork::kHidden);
  trace.fc1_act.resize(static_cast<size_t>(batch) * QNetwork::kHidden);
  trace.q.resize(static_cast<size_t>(batch) * kNumActions);

  for (int b = 0; b < batch; ++b) {
    const size_t ci = static_cast<size_t>(b) * conv_n;
    conv_forward(net.conv1, trace.input.data() + static_cast<size_t>(b) * in_n,
                 trace.conv1_pre.data() + ci, net.height, net.width);
    relu_forward(trace.conv1_pre.data() + ci, trace.conv1_act.data() + ci,
                 conv_n);
    conv_forward(net.conv2, trace.conv1_act.data() + ci,
                 trace.conv2_pre.data() + ci, net.height, net.width);
    relu_forward(trace.conv2_pre.data() + ci, trace.conv2_act.data() + ci,
                 conv_n);
  }
  dense_forward_batch(net.fc1, trace.conv2_act.data(), batch,
                      trace.fc1_pre.data());
  relu_forward(trace.fc1_pre.data(), trace.fc1_act.data(),
               batch * QNetwork::kHidden);
  dense_forward_batch(net.fc2, trace.fc1_act.data(), batch, trace.q.data());
}

void backward_params_batch(const QNetwork& net, const BatchTrace& trace,
                           std::span<const double> dq, Gradients& grads) {
  const int B = trace.batch;
  const int conv_n = net.conv_size();
  const int in_n = net.input_size();
  if (static_cast<int>(dq.size()) != B * kNumActions) {
    throw ShapeMismatchError("backward_params_batch: dq size mismatch");
  }

  thread_local std::vector<double> d_fc1, d_conv2, d_conv1;
  d_fc1.assign(static_cast<size_t>(B) * QNetwork::kHidden, 0.0);
  dense_backward_input_batch(net.fc2, dq.data(), B, d_fc1.data());
  relu_backward(trace.fc1_pre.data(), d_fc1.data(), B * QNetwork::kHidden);

  d_conv2.assign(static_cast<size_t>(B) * conv_n, 0.0);
  dense_backward_input_batch(net.fc1, d_fc1.data(), B, d_conv2.data());
  relu_backward(trace.conv2_pre.data(), d_conv2.data(), B * conv_n);

  dense_backward_params_batch(net.fc2, trace.fc1_act.data(), dq.data(), B,
                              grads.fc2_w.data(), grads.fc2_b.data());
  dense_backward_params_batch(net.fc1, trace.conv2_act.data(), d_fc1.data(),
                              B, grads.fc1_w.data(), grads.fc1_b.data());

  for (int b = 0; b < B; ++b) {
    const size_t ci = static_cast<size_t>(b) * conv_n;
    conv_backward_params(net.conv2, trace.conv1_act.data() + ci,
                         d_conv2.data() + ci, grads.conv2_w.data(),
                         grads.conv2_b.data(), net.height, net.width);
    d_conv1.assign(static_cast<size_t>(conv_n), 0.0);
    conv_backward_input(net.conv2, d_conv2.data() + ci, d_conv1.data(),
                        net.height, net.width);
    relu_backward(trace.conv1_pre.data() + ci, d_conv1.data(), conv_n);
    conv_backward_params(net.conv1,
                         trace.input.data() + static_cast<size_t>(b) * in_n,
                         d_conv1.data(), grads.conv1_w.data(),
                         grads.conv1_b.data(), net.height, net.width);
  }
}

// ------------------------------------------------------------------- QoI

std::array<double, kNumActions> softmax(
    const std::array<double, kNumActions>& q) {
  double mx = q[0];
  for (double v : q) mx = std::max(mx, v);
  std::array<double, kNumActions> p{};
  double sum = 0.0;
  for (int i = 0; i < kNumActions; ++i) {
    p[static_cast<size_t>(i)] = std::exp(q[static_cast<size_t>(i)] - mx);
    sum += p[static_cast<size_t>(i)];
  }
  for (double& v : p) v /= sum;
  return p;
}

const char* stage_name(Stage s) {
  return s == Stage::PreSoftmax ? "pre" : "post";
}

bool stage_from_name(const std::string& name, Stage* out) {
  if (name == "pre" || name == "pre_softmax") {
    *out = Stage::PreSoftmax;
    return true;
  }
  if (name == "post" || name == "post_softmax") {
    *out = Stage::PostSoftmax;
    return true;
  }
  return false;
}

double qoi_value(const std::array<double, kNumActions>& q, const QoI& qoi) {
  const size_t a = static_cast<size_t>(qoi.action);
  if (qoi.stage == Stage::PreSoftmax) return q[a];
  return softmax(q)[a];
}

std::array<double, kNumActions> qoi_cotangent(
    const std::array<double, kNumActions>& q, const QoI& qoi) {
  std::array<double, kNumActions> dq{};
  const size_t a = static_cast<size_t>(qoi.action);
  if (qoi.stage == Stage::PreSoftmax) {
    dq[a] = 1.0;
    return dq;
  }
  // d softmax_a / d q_j = sigma_a (delta_aj - sigma_j)
  std::array<double, kNumActions> p = softmax(q);
  for (int j = 0; j < kNumActions; ++j) {
    dq[static_cast<size_t>(j)] =
        p[a] * ((static_cast<size_t>(j) == a ? 1.0 : 0.0) -
                p[static_cast<size_t>(j)]);
  }
  return dq;
}

std::vector<double> input_gradient(const QNetwork& net,
                                   std::span<const double> input,
                                   const QoI& qoi) {
  thread_local ForwardTrace trace;
  forward(net, input, trace);
  std::array<double, kNumActions> dq = qoi_cotangent(trace.q, qoi);
  std::vector<double> grad(static_cast<size_t>(net.input_size()));
  backward_input(net, trace, dq, grad);
  return grad;
}

Action policy_action(const QNetwork& net, std::span<const double> input,
                     std::span<const Action> legal) {
  std::array<double, kNumActions> q = forward(net, input);
  static constexpr std::array<Action, kNumActions> kAll{
      Action::North, Action::South, Action::East, Action::West};
  std::span<const Action> cand = legal.empty() ? std::span<const Action>(kAll)
                                               : legal;
  Action best = cand[0];
  double best_q = q[static_cast<size_t>(cand[0])];
  for (Action a : cand.subspan(1)) {
    double v = q[static_cast<size_t>(a)];
    if (v > best_q ||
        (v == best_q && static_cast<int>(a) < static_cast<int>(best))) {
      best = a;
      best_q = v;
    }
  }
  return best;
}

}  // namespace rlx
