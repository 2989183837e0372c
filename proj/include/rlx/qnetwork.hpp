#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "rlx/rng.hpp"
#include "rlx/types.hpp"

namespace rlx {

// 3x3 convolution, stride 1, zero ("same") padding. Weights are stored
// [out_ch][in_ch][3][3], activations [ch][y][x] row-major.
struct Conv3x3 {
  int in_ch = 0;
  int out_ch = 0;
  std::vector<double> w;  // out_ch*in_ch*9
  std::vector<double> b;  // out_ch
};

// Fully connected layer; weights [out][in] row-major.
struct Dense {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<double> w;
  std::vector<double> b;
};

// Named view of one parameter tensor, used by the optimizer, the
// checkpoint writer and gradient checks. Views always appear in the fixed
// order conv1.w, conv1.b, conv2.w, conv2.b, fc1.w, fc1.b, fc2.w, fc2.b.
struct ParamView {
  std::string name;
  std::vector<int> shape;
  double* data = nullptr;
  size_t size = 0;
};

// Action-value network over stacked binary frames:
//   input 12 x H x W
//   -> conv 16@3x3 + ReLU -> conv 16@3x3 + ReLU
//   -> flatten -> dense 256 + ReLU -> dense 4 (Q-values, one per action)
// All arithmetic is double precision and fully deterministic.
struct QNetwork {
  static constexpr int kConvChannels = 16;
  static constexpr int kHidden = 256;

  int width = 0;
  int height = 0;
  Conv3x3 conv1, conv2;
  Dense fc1, fc2;

  int input_size() const { return kStateChannels * height * width; }
  int conv_size() const { return kConvChannels * height * width; }

  // Kaiming-uniform weights, bound sqrt(6 / fan_in); zero biases. Consumes
  // values from `rng` in a fixed order.
  static QNetwork init(int width, int height, Rng& rng);

  std::vector<ParamView> param_views();
  std::vector<ParamView> param_views() const;  // const data exposed as-is
  size_t param_count() const;
};

// Activations of one forward pass, kept for the backward passes.
struct ForwardTrace {
  std::vector<double> input;           // 12*H*W
  std::vector<double> conv1_pre, conv1_act;
  std::vector<double> conv2_pre, conv2_act;
  std::vector<double> fc1_pre, fc1_act;
  std::array<double, kNumActions> q{};
};

// Parameter gradients, same shapes/order as the network parameters.
struct Gradients {
  std::vector<double> conv1_w, conv1_b;
  std::vector<double> conv2_w, conv2_b;
  std::vector<double> fc1_w, fc1_b;
  std::vector<double> fc2_w, fc2_b;

  static Gradients zeros_like(const QNetwork& net);
  void clear();
  std::vector<std::pair<std::string, std::span<double>>> views();
};

void forward(const QNetwork& net, std::span<const double> input,
             ForwardTrace& trace);
std::array<double, kNumActions> forward(const QNetwork& net,
                                        std::span<const double> input);

// dL/dinput for the cotangent dL/dq given in `dq`. `dinput` must have
// input_size() elements; it is overwritten.
void backward_input(const QNetwork& net, const ForwardTrace& trace,
                    std::span<const double> dq, std::span<double> dinput);

// Accumulates dL/dparams for the cotangent `dq` into `grads`.
void backward_params(const QNetwork& net, const ForwardTrace& trace,
                     std::span<const double> dq, Gradients& grads);

// Activations of a whole batch, flat per layer (sample-major). The batched
// forward/backward pair computes the same math as the single-sample one but
// blocks the dense layers over the batch so the fc1 weight matrix is
// streamed once per batch instead of once per sample; this is the training
// fast path. Within one code path results are bit-stable, but batched and
// single-sample results may differ in the last bits (different summation
// grouping).
struct BatchTrace {
  int batch = 0;
  std::vector<double> input;                 // B * 12*H*W
  std::vector<double> conv1_pre, conv1_act;  // B * 16*H*W
  std::vector<double> conv2_pre, conv2_act;
  std::vector<double> fc1_pre, fc1_act;      // B * 256
  std::vector<double> q;                     // B * 4
};

void forward_batch(const QNetwork& net, std::span<const double> inputs,
                   int batch, BatchTrace& trace);

// Accumulates parameter gradients for all samples; `dq` holds batch * 4
// cotangents. Samples contribute in ascending batch order (fixed order,
// deterministic results).
void backward_params_batch(const QNetwork& net, const BatchTrace& trace,
                           std::span<const double> dq, Gradients& grads);

// Numerically stable softmax over the Q-vector.
std::array<double, kNumActions> softmax(
    const std::array<double, kNumActions>& q);

// Quantity of interest for gradient-based attributions: the Q-value of an
// action either before or after the softmax over actions.
enum class Stage { PreSoftmax = 0, PostSoftmax = 1 };

struct QoI {
  Action action = Action::North;
  Stage stage = Stage::PreSoftmax;
};

const char* stage_name(Stage s);
bool stage_from_name(const std::string& name, Stage* out);

// Scalar phi(q) for the QoI and its cotangent dphi/dq.
double qoi_value(const std::array<double, kNumActions>& q, const QoI& qoi);
std::array<double, kNumActions> qoi_cotangent(
    const std::array<double, kNumActions>& q, const QoI& qoi);

// Exact gradient of the QoI with respect to every input feature.
std::vector<double> input_gradient(const QNetwork& net,
                                   std::span<const double> input,
                                   const QoI& qoi);

// Greedy action among `legal` (all actions when empty); ties broken by the
// lowest action index.
Action policy_action(const QNetwork& net, std::span<const double> input,
                     std::span<const Action> legal = {});

}  // namespace rlx
