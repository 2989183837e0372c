#pragma once

#include <string>
#include <vector>

#include "rlx/gridworld.hpp"
#include "rlx/qnetwork.hpp"

namespace rlx {

// One step of a greedy rollout: the state before the action, the action,
// the reward received and the Q-values that chose the action.
struct RolloutStep {
  GridState state;
  Action action = Action::North;
  double reward = 0.0;
  std::array<double, kNumActions> q{};
};

// Greedy rollouts of the same network from a start state and from that
// state with one feature perturbed to a baseline value. The perturbed state
// is a real environment state (the dynamics genuinely lose the perturbed
// bit), so the two reward streams can diverge at any later step. Both
// rollouts stop at termination or after max_horizon steps.
struct PairedRollout {
  int feature_index = -1;
  double baseline_value = 0.0;
  std::vector<RolloutStep> original;
  std::vector<RolloutStep> counterfactual;
};

PairedRollout paired_rollout(const QNetwork& net, const GridWorld& world,
                             const GridState& start, int feature_index,
                             double baseline, int max_horizon);

// Per-step attribution z_tau = gamma^tau * (r_tau - r'_tau), tau counted
// from the start state; the shorter reward stream is zero-padded. `total`
// is the difference of the discounted returns (the sum of z), and `gap`
// quantifies how far this temporal attribution is from an occlusion score
// supplied by the caller (reported as a diagnostic, never asserted).
struct TemporalDecomposition {
  int feature_index = -1;
  std::vector<double> z;
  double total = 0.0;
};

TemporalDecomposition temporal_decomposition(const PairedRollout& rollout,
                                             double gamma);

// CSV schema: feature_index,tau,z_tau,total,oc1_score,gap with one row per
// tau and the summary columns repeated on each row.
struct TemporalReport {
  TemporalDecomposition decomposition;
  double oc1_score = 0.0;  // occlusion score of the same feature at start
};

void write_temporal_csv(const std::string& path,
                        const std::vector<TemporalReport>& reports);

}  // namespace rlx
