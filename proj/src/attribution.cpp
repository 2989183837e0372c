#include "rlx/attribution.hpp"

#include <algorithm>
#include <cmath>

#include "rlx/error.hpp"

namespace rlx {
namespace {

std::vector<double> softmax_vec(std::span<const double> q) {
  double mx = q[0];
  for (double v : q) mx = std::max(mx, v);
  std::vector<double> p(q.size());
  double sum = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    p[i] = std::exp(q[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

// Softmax over all entries except `skip`.
std::vector<double> softmax_excluding(std::span<const double> q, int skip) {
  std::vector<double> rest;
  rest.reserve(q.size() - 1);
  for (size_t i = 0; i < q.size(); ++i) {
    if (static_cast<int>(i) != skip) rest.push_back(q[i]);
  }
  return softmax_vec(rest);
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  double kl = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

double effective_sigma(std::span<const double> input, double sigma) {
  if (sigma >= 0.0) return sigma;
  auto [mn, mx] = std::minmax_element(input.begin(), input.end());
  return 0.15 * (*mx - *mn);
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::SM: return "sm";
    case Method::IG: return "ig";
    case Method::SG: return "sg";
    case Method::OC1: return "oc1";
    case Method::SARFA: return "sarfa";
  }
  return "?";
}

bool method_from_name(const std::string& name, Method* out) {
  for (Method m : all_methods()) {
    if (name == method_name(m)) {
      *out = m;
      return true;
    }
  }
  return false;
}

std::vector<Method> all_methods() {
  return {Method::SM, Method::IG, Method::SG, Method::OC1, Method::SARFA};
}

void Partition::validate(int feature_count) const {
  std::vector<uint8_t> seen(static_cast<size_t>(feature_count), 0);
  for (const std::vector<int>& part : parts) {
    for (int i : part) {
      if (i < 0 || i >= feature_count) {
        throw OverlappingPartsError("partition: feature index out of range");
      }
      if (seen[static_cast<size_t>(i)]) {
        throw OverlappingPartsError(
            "partition: feature " + std::to_string(i) +
            " appears in more than one part");
      }
      seen[static_cast<size_t>(i)] = 1;
    }
  }
}

Partition default_partition(const GridState& s) {
  Partition p;
  const int hw = s.height * s.width;
  for (int c = 0; c < kChannelsPerFrame; ++c) {
    if (static_cast<Channel>(c) == Channel::Wall) continue;
    for (int i = 0; i < hw; ++i) {
      if (s.frames[0][static_cast<size_t>(c * hw + i)]) {
        p.parts.push_back({c * hw + i});
      }
    }
  }
  return p;
}

// ----------------------------------------------------------- gradient based

std::vector<double> saliency_scores(const QNetwork& net,
                                    std::span<const double> input,
                                    const QoI& qoi) {
  return input_gradient(net, input, qoi);
}

std::vector<double> integrated_gradient_scores(const QNetwork& net,
                                               std::span<const double> input,
                                               const QoI& qoi, int steps,
                                               double baseline) {
  if (steps < 1) throw Error("integrated gradients: steps must be >= 1");
  const int n = net.input_size();
  std::vector<double> acc(static_cast<size_t>(n), 0.0);
  std::vector<double> point(static_cast<size_t>(n));
  std::vector<double> grad(static_cast<size_t>(n));
  ForwardTrace trace;
  for (int k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) / steps;
    for (int i = 0; i < n; ++i) {
      point[static_cast<size_t>(i)] =
          baseline + t * (input[static_cast<size_t>(i)] - baseline);
    }
    forward(net, point, trace);
    backward_input(net, trace, qoi_cotangent(trace.q, qoi), grad);
    for (int i = 0; i < n; ++i) acc[static_cast<size_t>(i)] += grad[static_cast<size_t>(i)];
  }
  for (int i = 0; i < n; ++i) {
    acc[static_cast<size_t>(i)] *=
        (input[static_cast<size_t>(i)] - baseline) / steps;
  }
  return acc;
}

std::vector<double> smoothgrad_scores(const QNetwork& net,
                                      std::span<const double> input,
                                      const QoI& qoi, int samples,
                                      double sigma, uint64_t seed) {
  if (samples < 1) throw Error("smoothgrad: samples must be >= 1");
  const int n = net.input_size();
  const double sd = effective_sigma(input, sigma);
  std::vector<double> acc(static_cast<size_t>(n), 0.0);
  std::vector<double> point(static_cast<size_t>(n));
  std::vector<double> grad(static_cast<size_t>(n));
  ForwardTrace trace;
  Rng rng = Rng::derive(seed, 0x5347);  // independent noise stream
  for (int k = 0; k < samples; ++k) {
    for (int i = 0; i < n; ++i) {
      point[static_cast<size_t>(i)] = input[static_cast<size_t>(i)] +
                                      (sd > 0.0 ? rng.normal(0.0, sd) : 0.0);
    }
    forward(net, point, trace);
    backward_input(net, trace, qoi_cotangent(trace.q, qoi), grad);
    for (int i = 0; i < n; ++i) acc[static_cast<size_t>(i)] += grad[static_cast<size_t>(i)];
  }
  for (double& v : acc) v /= samples;
  return acc;
}

// ------------------------------------------------------- perturbation based

std::vector<double> occlusion_scores(const QNetwork& net,
                                     std::span<const double> input,
                                     const Partition& partition,
                                     const QoI& qoi, double baseline) {
  partition.validate(net.input_size());
  std::vector<double> scores(input.size(), 0.0);
  const double phi = qoi_value(forward(net, input), qoi);
  std::vector<double> pert(input.begin(), input.end());
  for (const std::vector<int>& part : partition.parts) {
    if (part.empty()) continue;
    for (int i : part) pert[static_cast<size_t>(i)] = baseline;
    const double phi_pert = qoi_value(forward(net, pert), qoi);
    const double per_cell = (phi - phi_pert) / static_cast<double>(part.size());
    for (int i : part) {
      scores[static_cast<size_t>(i)] = per_cell;
      pert[static_cast<size_t>(i)] = input[static_cast<size_t>(i)];
    }
  }
  return scores;
}

double sarfa_score(std::span<const double> q, std::span<const double> q_pert,
                   int action) {
  const std::vector<double> p = softmax_vec(q);
  const std::vector<double> p_pert = softmax_vec(q_pert);
  const double dp = p[static_cast<size_t>(action)] -
                    p_pert[static_cast<size_t>(action)];
  if (dp <= 0.0) return 0.0;
  const std::vector<double> rest = softmax_excluding(q, action);
  const std::vector<double> rest_pert = softmax_excluding(q_pert, action);
  const double k = 1.0 / (1.0 + kl_divergence(rest, rest_pert));
  return 2.0 * k * dp / (k + dp);
}

std::vector<double> sarfa_scores(const QNetwork& net,
                                 std::span<const double> input,
                                 const Partition& partition, Action action,
                                 double baseline) {
  partition.validate(net.input_size());
  std::vector<double> scores(input.size(), 0.0);
  const std::array<double, kNumActions> q = forward(net, input);
  std::vector<double> pert(input.begin(), input.end());
  for (const std::vector<int>& part : partition.parts) {
    if (part.empty()) continue;
    for (int i : part) pert[static_cast<size_t>(i)] = baseline;
    const std::array<double, kNumActions> qp = forward(net, pert);
    const double sc = sarfa_score(q, qp, static_cast<int>(action));
    for (int i : part) {
      scores[static_cast<size_t>(i)] = sc;
      pert[static_cast<size_t>(i)] = input[static_cast<size_t>(i)];
    }
  }
  return scores;
}

// ------------------------------------------------------------------ driver

namespace {

AttributionMap make_map(const GridState& state, Method method,
                        const QoI& qoi, std::vector<double> scores) {
  AttributionMap m;
  m.method = method;
  m.qoi = qoi;
  m.width = state.width;
  m.height = state.height;
  m.scores = std::move(scores);
  return m;
}

}  // namespace

AttributionMap attribute(const QNetwork& net, const GridState& state,
                         Method method, const QoI& qoi,
                         const MethodParams& params) {
  if (net.width != state.width || net.height != state.height) {
    throw ShapeMismatchError("attribute: state does not match network grid");
  }
  const std::vector<double> input = state.to_tensor();
  switch (method) {
    case Method::SM:
      return make_map(state, method, qoi, saliency_scores(net, input, qoi));
    case Method::IG:
      return make_map(state, method, qoi,
                      integrated_gradient_scores(net, input, qoi,
                                                 params.ig_steps,
                                                 params.baseline));
    case Method::SG:
      return make_map(state, method, qoi,
                      smoothgrad_scores(net, input, qoi, params.sg_samples,
                                        params.sg_sigma, params.seed));
    case Method::OC1: {
      Partition part = default_partition(state);
      return make_map(state, method, qoi,
                      occlusion_scores(net, input, part, qoi, params.baseline));
    }
    case Method::SARFA: {
      Partition part = default_partition(state);
      QoI q = qoi;
      q.stage = Stage::PostSoftmax;
      return make_map(state, method, q,
                      sarfa_scores(net, input, part, qoi.action,
                                   params.baseline));
    }
  }
  throw Error("attribute: unknown method");
}

std::array<AttributionMap, kNumActions> attribute_all_actions(
    const QNetwork& net, const GridState& state, Method method, Stage stage,
    const MethodParams& params) {
  if (net.width != state.width || net.height != state.height) {
    throw ShapeMismatchError("attribute: state does not match network grid");
  }
  const std::vector<double> input = state.to_tensor();
  const int n = net.input_size();
  std::array<AttributionMap, kNumActions> out;
  for (int a = 0; a < kNumActions; ++a) {
    out[static_cast<size_t>(a)] = make_map(
        state, method, QoI{static_cast<Action>(a), stage},
        std::vector<double>(static_cast<size_t>(n), 0.0));
  }

  auto grad_all = [&](std::span<const double> point, double scale,
                      auto&& weight) {
    // One forward, four backward passes sharing the trace.
    thread_local ForwardTrace trace;
    thread_local std::vector<double> grad;
    grad.resize(static_cast<size_t>(n));
    forward(net, point, trace);
    for (int a = 0; a < kNumActions; ++a) {
      QoI qoi{static_cast<Action>(a), stage};
      backward_input(net, trace, qoi_cotangent(trace.q, qoi), grad);
      std::vector<double>& acc = out[static_cast<size_t>(a)].scores;
      for (int i = 0; i < n; ++i) {
        acc[static_cast<size_t>(i)] +=
            scale * weight(i) * grad[static_cast<size_t>(i)];
      }
    }
  };

  switch (method) {
    case Method::SM: {
      grad_all(input, 1.0, [](int) { return 1.0; });
      break;
    }
    case Method::IG: {
      const int steps = params.ig_steps;
      if (steps < 1) throw Error("integrated gradients: steps must be >= 1");
      std::vector<double> point(static_cast<size_t>(n));
      for (int k = 1; k <= steps; ++k) {
        const double t = static_cast<double>(k) / steps;
        for (int i = 0; i < n; ++i) {
          point[static_cast<size_t>(i)] =
              params.baseline +
              t * (input[static_cast<size_t>(i)] - params.baseline);
        }
        grad_all(point, 1.0 / steps, [&](int i) {
          return input[static_cast<size_t>(i)] - params.baseline;
        });
      }
      break;
    }
    case Method::SG: {
      const int samples = params.sg_samples;
      if (samples < 1) throw Error("smoothgrad: samples must be >= 1");
      const double sd = effective_sigma(input, params.sg_sigma);
      Rng rng = Rng::derive(params.seed, 0x5347);
      std::vector<double> point(static_cast<size_t>(n));
      for (int k = 0; k < samples; ++k) {
        for (int i = 0; i < n; ++i) {
          point[static_cast<size_t>(i)] =
              input[static_cast<size_t>(i)] +
              (sd > 0.0 ? rng.normal(0.0, sd) : 0.0);
        }
        grad_all(point, 1.0 / samples, [](int) { return 1.0; });
      }
      break;
    }
    case Method::OC1:
    case Method::SARFA: {
      Partition part = default_partition(state);
      part.validate(n);
      const std::array<double, kNumActions> q = forward(net, input);
      std::vector<double> pert(input.begin(), input.end());
      for (const std::vector<int>& p : part.parts) {
        if (p.empty()) continue;
        for (int i : p) pert[static_cast<size_t>(i)] = params.baseline;
        const std::array<double, kNumActions> qp = forward(net, pert);
        for (int a = 0; a < kNumActions; ++a) {
          double sc;
          if (method == Method::OC1) {
            QoI qoi{static_cast<Action>(a), stage};
            sc = (qoi_value(q, qoi) - qoi_value(qp, qoi)) /
                 static_cast<double>(p.size());
          } else {
            sc = sarfa_score(q, qp, a);
          }
          for (int i : p) {
            out[static_cast<size_t>(a)].scores[static_cast<size_t>(i)] = sc;
          }
        }
        for (int i : p) pert[static_cast<size_t>(i)] = input[static_cast<size_t>(i)];
      }
      if (method == Method::SARFA) {
        for (auto& m : out) m.qoi.stage = Stage::PostSoftmax;
      }
      break;
    }
  }
  return out;
}

}  // namespace rlx
