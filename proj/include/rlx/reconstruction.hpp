#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rlx/attribution.hpp"

namespace rlx {

// ------------------------------------------------------------ behavior map

inline constexpr int8_t kNoLabel = -1;  // "no winning action" marker

// Per-feature action labels: G(s)_i = argmax_a g(s, f_a)_i over the scored
// partition features; exact ties and unscored features carry kNoLabel.
struct BehaviorMap {
  Method method = Method::SM;
  Stage stage = Stage::PreSoftmax;
  int width = 0;
  int height = 0;
  std::vector<int8_t> labels;      // kStateChannels*height*width
  std::vector<double> win_scores;  // attribution value of the winning action
};

BehaviorMap behavior_map(const QNetwork& net, const GridState& state,
                         Method method, Stage stage,
                         const MethodParams& params = {});

// Drops labels of every feature that is not in `channel` (matched in both
// frames by semantic channel index).
void mask_to_channel(BehaviorMap& map, Channel channel);

// ------------------------------------------------------------ reachability

enum class ReachKind { L1 = 0, L2 = 1, Custom = 2 };

const char* reach_name(ReachKind k);
bool reach_from_name(const std::string& name, ReachKind* out);

using ReachFn = std::function<double(Coord agent, Coord cell)>;

// Distance from the agent to every feature's cell, with the normalizing
// maximum for the grid. Custom kinds supply both the function and the
// maximum.
struct ReachabilityMap {
  ReachKind kind = ReachKind::L1;
  int width = 0;
  int height = 0;
  std::vector<double> values;  // kStateChannels*height*width
  double max_reachability = 0.0;
};

ReachabilityMap reachability(const GridState& state, ReachKind kind,
                             const ReachFn& custom_fn = {},
                             double custom_max = 0.0);

// ---------------------------------------------------------- reconstruction

enum class ReconstructorKind { LAR = 0, KAR = 1 };

const char* reconstructor_name(ReconstructorKind k);
bool reconstructor_from_name(const std::string& name, ReconstructorKind* out);

struct Reconstructor {
  ReconstructorKind kind = ReconstructorKind::LAR;
  double lambda_norm = 1.0;  // LAR radius as a fraction of max_reachability
  double kernel_b = 0.0;     // KAR kernel offset
};

struct ReconstructionResult {
  Action action = Action::North;
  std::array<double, kNumActions> support{};  // votes (LAR) or mass (KAR)
  int participating = 0;  // labeled features that contributed
  bool degenerate = false;  // no feature voted; action is the index-0 default
};

// Plurality vote of labeled features within reachability lambda_norm *
// max_reachability; ties pick the lowest action id.
ReconstructionResult limited_action_reconstruction(const BehaviorMap& map,
                                                   const ReachabilityMap& reach,
                                                   double lambda_norm);

// Kernel-weighted vote with weight exp(-(r_i - b)^2) per labeled feature.
ReconstructionResult kernel_action_reconstruction(const BehaviorMap& map,
                                                  const ReachabilityMap& reach,
                                                  double kernel_b);

// End-to-end: behavior map (optionally masked to `channel`), reachability,
// then the chosen reconstructor.
ReconstructionResult reconstruct(const QNetwork& net, const GridState& state,
                                 Method method, Stage stage,
                                 const Reconstructor& rec,
                                 ReachKind reach_kind = ReachKind::L1,
                                 std::optional<Channel> channel = {},
                                 const MethodParams& params = {});

}  // namespace rlx
