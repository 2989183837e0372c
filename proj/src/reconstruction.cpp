#include "rlx/reconstruction.hpp"

#include <cmath>

#include "rlx/error.hpp"

namespace rlx {

// ------------------------------------------------------------ behavior map

BehaviorMap behavior_map(const QNetwork& net, const GridState& state,
                         Method method, Stage stage,
                         const MethodParams& params) {
  std::array<AttributionMap, kNumActions> per_action =
      attribute_all_actions(net, state, method, stage, params);

  BehaviorMap map;
  map.method = method;
  map.stage = method == Method::SARFA ? Stage::PostSoftmax : stage;
  map.width = state.width;
  map.height = state.height;
  const size_t n = static_cast<size_t>(state.feature_count());
  map.labels.assign(n, kNoLabel);
  map.win_scores.assign(n, 0.0);

  // Labels are defined on the scored partition, not on every feature.
  const Partition part = default_partition(state);
  for (const std::vector<int>& p : part.parts) {
    for (int idx : p) {
      const size_t i = static_cast<size_t>(idx);
      int best = 0;
      bool tie = false;
      double best_v = per_action[0].scores[i];
      for (int a = 1; a < kNumActions; ++a) {
        const double v = per_action[static_cast<size_t>(a)].scores[i];
        if (v > best_v) {
          best_v = v;
          best = a;
          tie = false;
        } else if (v == best_v) {
          tie = true;
        }
      }
      if (!tie) {
        map.labels[i] = static_cast<int8_t>(best);
        map.win_scores[i] = best_v;
      }
    }
  }
  return map;
}

void mask_to_channel(BehaviorMap& map, Channel channel) {
  const int hw = map.height * map.width;
  for (int c = 0; c < kStateChannels; ++c) {
    if (c % kChannelsPerFrame == static_cast<int>(channel)) continue;
    for (int i = 0; i < hw; ++i) {
      map.labels[static_cast<size_t>(c * hw + i)] = kNoLabel;
    }
  }
}

// ------------------------------------------------------------ reachability

const char* reach_name(ReachKind k) {
  switch (k) {
    case ReachKind::L1: return "l1";
    case ReachKind::L2: return "l2";
    case ReachKind::Custom: return "custom";
  }
  return "?";
}

bool reach_from_name(const std::string& name, ReachKind* out) {
  if (name == "l1") { *out = ReachKind::L1; return true; }
  if (name == "l2") { *out = ReachKind::L2; return true; }
  if (name == "custom") { *out = ReachKind::Custom; return true; }
  return false;
}

ReachabilityMap reachability(const GridState& state, ReachKind kind,
                             const ReachFn& custom_fn, double custom_max) {
  ReachabilityMap map;
  map.kind = kind;
  map.width = state.width;
  map.height = state.height;
  map.values.assign(static_cast<size_t>(state.feature_count()), 0.0);

  ReachFn fn;
  switch (kind) {
    case ReachKind::L1:
      fn = [](Coord a, Coord c) {
        return static_cast<double>(l1_distance(a, c));
      };
      map.max_reachability = state.width - 1 + state.height - 1;
      break;
    case ReachKind::L2:
      fn = l2_distance;
      map.max_reachability = l2_distance({0, 0}, {state.width - 1,
                                                  state.height - 1});
      break;
    case ReachKind::Custom:
      if (!custom_fn || custom_max <= 0.0) {
        throw Error("reachability: custom kind needs a function and maximum");
      }
      fn = custom_fn;
      map.max_reachability = custom_max;
      break;
  }

  const int hw = state.height * state.width;
  for (int y = 0; y < state.height; ++y) {
    for (int x = 0; x < state.width; ++x) {
      const double r = fn(state.agent_pos, {x, y});
      for (int c = 0; c < kStateChannels; ++c) {
        map.values[static_cast<size_t>(c * hw + y * state.width + x)] = r;
      }
    }
  }
  return map;
}

// ---------------------------------------------------------- reconstruction

const char* reconstructor_name(ReconstructorKind k) {
  return k == ReconstructorKind::LAR ? "lar" : "kar";
}

bool reconstructor_from_name(const std::string& name, ReconstructorKind* out) {
  if (name == "lar") { *out = ReconstructorKind::LAR; return true; }
  if (name == "kar") { *out = ReconstructorKind::KAR; return true; }
  return false;
}

namespace {

ReconstructionResult vote(const BehaviorMap& map, const ReachabilityMap& reach,
                          const std::function<double(double)>& weight_of_r) {
  if (map.labels.size() != reach.values.size()) {
    throw ShapeMismatchError("reconstruct: behavior/reachability mismatch");
  }
  ReconstructionResult res;
  for (size_t i = 0; i < map.labels.size(); ++i) {
    const int8_t label = map.labels[i];
    if (label == kNoLabel) continue;
    const double w = weight_of_r(reach.values[i]);
    if (w <= 0.0) continue;
    res.support[static_cast<size_t>(label)] += w;
    res.participating += 1;
  }
  if (res.participating == 0) {
    res.degenerate = true;
    res.action = static_cast<Action>(0);
    return res;
  }
  int best = 0;
  for (int a = 1; a < kNumActions; ++a) {
    if (res.support[static_cast<size_t>(a)] >
        res.support[static_cast<size_t>(best)]) {
      best = a;  // ties keep the lowest action id
    }
  }
  res.action = static_cast<Action>(best);
  return res;
}

}  // namespace

ReconstructionResult limited_action_reconstruction(const BehaviorMap& map,
                                                   const ReachabilityMap& reach,
                                                   double lambda_norm) {
  const double lambda = lambda_norm * reach.max_reachability;
  return vote(map, reach,
              [lambda](double r) { return r <= lambda ? 1.0 : 0.0; });
}

ReconstructionResult kernel_action_reconstruction(const BehaviorMap& map,
                                                  const ReachabilityMap& reach,
                                                  double kernel_b) {
  return vote(map, reach, [kernel_b](double r) {
    const double d = r - kernel_b;
    return std::exp(-d * d);
  });
}

ReconstructionResult reconstruct(const QNetwork& net, const GridState& state,
                                 Method method, Stage stage,
                                 const Reconstructor& rec, ReachKind reach_kind,
                                 std::optional<Channel> channel,
                                 const MethodParams& params) {
  BehaviorMap map = behavior_map(net, state, method, stage, params);
  if (channel) mask_to_channel(map, *channel);
  const ReachabilityMap reach = reachability(state, reach_kind);
  if (rec.kind == ReconstructorKind::LAR) {
    return limited_action_reconstruction(map, reach, rec.lambda_norm);
  }
  return kernel_action_reconstruction(map, reach, rec.kernel_b);
}

}  // namespace rlx
