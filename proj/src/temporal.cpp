#include "rlx/temporal.hpp"

#include <cmath>

#include "rlx/csv.hpp"
#include "rlx/error.hpp"

namespace rlx {
namespace {

std::vector<RolloutStep> greedy_rollout(const QNetwork& net,
                                        const GridWorld& world,
                                        GridState s, int max_horizon) {
  std::vector<RolloutStep> steps;
  std::vector<double> input(static_cast<size_t>(net.input_size()));
  while (s.terminal == Terminal::None &&
         static_cast<int>(steps.size()) < max_horizon) {
    RolloutStep step;
    step.state = s;
    s.to_tensor(input.data());
    step.q = forward(net, input);
    step.action = policy_action(net, input, world.legal_actions(s));
    Transition tr = world.step(s, step.action);
    step.reward = tr.reward;
    s = tr.next_state;
    steps.push_back(std::move(step));
  }
  return steps;
}

}  // namespace

PairedRollout paired_rollout(const QNetwork& net, const GridWorld& world,
                             const GridState& start, int feature_index,
                             double baseline, int max_horizon) {
  if (feature_index < 0 || feature_index >= start.feature_count()) {
    throw ShapeMismatchError("paired_rollout: feature index out of range");
  }
  PairedRollout out;
  out.feature_index = feature_index;
  out.baseline_value = baseline;

  GridState original = world.set_state(start);

  GridState perturbed_raw = start;
  const int fs = start.frame_size();
  const int frame = feature_index / fs;
  const int local = feature_index % fs;
  // Environment states are binary, so the baseline lands on the nearest bit.
  perturbed_raw.frames[static_cast<size_t>(frame)][static_cast<size_t>(local)] =
      baseline >= 0.5 ? 1 : 0;
  GridState counterfactual = world.set_state(perturbed_raw);

  out.original = greedy_rollout(net, world, std::move(original), max_horizon);
  out.counterfactual =
      greedy_rollout(net, world, std::move(counterfactual), max_horizon);
  return out;
}

TemporalDecomposition temporal_decomposition(const PairedRollout& rollout,
                                             double gamma) {
  TemporalDecomposition d;
  d.feature_index = rollout.feature_index;
  const size_t len =
      std::max(rollout.original.size(), rollout.counterfactual.size());
  d.z.resize(len, 0.0);
  double discount = 1.0;
  for (size_t tau = 0; tau < len; ++tau) {
    const double r = tau < rollout.original.size()
                         ? rollout.original[tau].reward
                         : 0.0;
    const double rp = tau < rollout.counterfactual.size()
                          ? rollout.counterfactual[tau].reward
                          : 0.0;
    d.z[tau] = discount * (r - rp);
    d.total += d.z[tau];
    discount *= gamma;
  }
  return d;
}

void write_temporal_csv(const std::string& path,
                        const std::vector<TemporalReport>& reports) {
  CsvWriter csv(path,
                {"feature_index", "tau", "z_tau", "total", "oc1_score", "gap"});
  for (const TemporalReport& rep : reports) {
    const TemporalDecomposition& d = rep.decomposition;
    const double gap = d.total - rep.oc1_score;
    for (size_t tau = 0; tau < d.z.size(); ++tau) {
      csv.row({CsvWriter::num(d.feature_index),
               CsvWriter::num(static_cast<long>(tau)), CsvWriter::num(d.z[tau]),
               CsvWriter::num(d.total), CsvWriter::num(rep.oc1_score),
               CsvWriter::num(gap)});
    }
    if (d.z.empty()) {
      // Start state already terminal for both rollouts: single summary row.
      csv.row({CsvWriter::num(d.feature_index), "0", "0",
               CsvWriter::num(d.total), CsvWriter::num(rep.oc1_score),
               CsvWriter::num(gap)});
    }
  }
}

}  // namespace rlx
