#include "rlx/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rlx/csv.hpp"
#include "rlx/error.hpp"
#include "rlx/parallel.hpp"

namespace rlx {

// -------------------------------------------------------- state collection

std::vector<GridState> collect_states(const QNetwork& net,
                                      const Layout& layout, uint64_t seed,
                                      const CollectOptions& opts) {
  GridWorld world(layout, opts.max_episode_steps);
  std::vector<std::vector<GridState>> per_match(
      static_cast<size_t>(opts.n_matches));
  parallel_for(opts.n_matches, opts.threads, [&](int m) {
    Rng rng = Rng::derive(seed, static_cast<uint64_t>(m));
    GridState s = world.reset();
    const int burst = static_cast<int>(
        rng.below(static_cast<uint64_t>(opts.random_start_steps) + 1));
    for (int i = 0; i < burst && s.terminal == Terminal::None; ++i) {
      std::vector<Action> legal = world.legal_actions(s);
      s = world.step(s, legal[static_cast<size_t>(rng.below(legal.size()))])
              .next_state;
    }
    std::vector<GridState>& out = per_match[static_cast<size_t>(m)];
    std::vector<double> input(static_cast<size_t>(net.input_size()));
    while (s.terminal == Terminal::None) {
      out.push_back(s);
      s.to_tensor(input.data());
      Action a = policy_action(net, input, world.legal_actions(s));
      s = world.step(s, a).next_state;
    }
  });
  std::vector<GridState> states;
  for (auto& v : per_match) {
    states.insert(states.end(), std::make_move_iterator(v.begin()),
                  std::make_move_iterator(v.end()));
  }
  return states;
}

std::vector<GridState> subsample_states(std::vector<GridState> states,
                                        size_t max_states) {
  if (max_states == 0 || states.size() <= max_states) return states;
  std::vector<GridState> out;
  out.reserve(max_states);
  const size_t n = states.size();
  for (size_t k = 0; k < max_states; ++k) {
    out.push_back(std::move(states[k * n / max_states]));
  }
  return out;
}

// ---------------------------------------------------------------- agreement

AgreementStat agreement(const QNetwork& net,
                        const std::vector<GridState>& states, Method method,
                        Stage stage, const Reconstructor& rec,
                        std::optional<Channel> channel,
                        const AgreementOptions& opts) {
  SweepSpec spec;
  spec.methods = {method};
  spec.stages = {stage};
  if (rec.kind == ReconstructorKind::LAR) {
    spec.lambdas = {rec.lambda_norm};
  } else {
    spec.kar_bs = {rec.kernel_b};
  }
  spec.channels = {channel};
  spec.params = opts.params;
  spec.reach = opts.reach;
  spec.threads = opts.threads;
  const std::vector<AgreementRow> rows = lambda_sweep(net, states, spec);
  AgreementStat stat;
  stat.agreement = rows[0].agreement;
  stat.n_states = rows[0].n_states;
  stat.n_degenerate = rows[0].n_degenerate;
  return stat;
}

// ------------------------------------------------------------ lambda sweep

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
  return grid;
}

namespace {

struct Combo {
  size_t method_stage;  // index into the unique (method, stage) list
  size_t channel;       // index into spec.channels
  ReconstructorKind rec;
  double param;
};

}  // namespace

std::vector<AgreementRow> lambda_sweep(const QNetwork& net,
                                       const std::vector<GridState>& states,
                                       const SweepSpec& spec) {
  if (states.empty()) throw EmptySampleError("lambda_sweep: no states");
  if (spec.methods.empty() || spec.stages.empty() || spec.channels.empty() ||
      (spec.lambdas.empty() && spec.kar_bs.empty())) {
    throw EmptySampleError("lambda_sweep: empty specification");
  }

  // Unique (method, stage) pairs; SARFA collapses to post-softmax.
  std::vector<std::pair<Method, Stage>> method_stages;
  for (Method m : spec.methods) {
    for (Stage st : spec.stages) {
      Stage eff = m == Method::SARFA ? Stage::PostSoftmax : st;
      std::pair<Method, Stage> key{m, eff};
      if (std::find(method_stages.begin(), method_stages.end(), key) ==
          method_stages.end()) {
        method_stages.push_back(key);
      }
    }
  }

  std::vector<Combo> combos;
  for (size_t ms = 0; ms < method_stages.size(); ++ms) {
    for (size_t c = 0; c < spec.channels.size(); ++c) {
      for (double l : spec.lambdas) {
        combos.push_back({ms, c, ReconstructorKind::LAR, l});
      }
      for (double b : spec.kar_bs) {
        combos.push_back({ms, c, ReconstructorKind::KAR, b});
      }
    }
  }

  const size_t n_states = states.size();
  const size_t n_combos = combos.size();
  // match/degenerate flags per (state, combo), written by per-state workers.
  std::vector<uint8_t> match(n_states * n_combos, 0);
  std::vector<uint8_t> degen(n_states * n_combos, 0);

  parallel_for(static_cast<int>(n_states), spec.threads, [&](int si) {
    const GridState& s = states[static_cast<size_t>(si)];
    std::vector<double> input(static_cast<size_t>(net.input_size()));
    s.to_tensor(input.data());
    const Action truth = policy_action(net, input, legal_actions_from_frame(s));
    const ReachabilityMap reach = reachability(s, spec.reach);

    for (size_t ms = 0; ms < method_stages.size(); ++ms) {
      const BehaviorMap base_map =
          behavior_map(net, s, method_stages[ms].first,
                       method_stages[ms].second, spec.params);
      for (size_t c = 0; c < spec.channels.size(); ++c) {
        BehaviorMap map = base_map;
        if (spec.channels[c]) mask_to_channel(map, *spec.channels[c]);
        for (size_t k = 0; k < n_combos; ++k) {
          const Combo& combo = combos[k];
          if (combo.method_stage != ms || combo.channel != c) continue;
          const ReconstructionResult r =
              combo.rec == ReconstructorKind::LAR
                  ? limited_action_reconstruction(map, reach, combo.param)
                  : kernel_action_reconstruction(map, reach, combo.param);
          const size_t slot = static_cast<size_t>(si) * n_combos + k;
          degen[slot] = r.degenerate;
          match[slot] = !r.degenerate && r.action == truth;
        }
      }
    }
  });

  std::vector<AgreementRow> rows;
  rows.reserve(n_combos);
  for (size_t k = 0; k < n_combos; ++k) {
    const Combo& combo = combos[k];
    AgreementRow row;
    row.method = method_stages[combo.method_stage].first;
    row.stage = method_stages[combo.method_stage].second;
    row.rec = combo.rec;
    row.channel = spec.channels[combo.channel];
    row.param = combo.param;
    row.n_states = static_cast<int>(n_states);
    long matches = 0, degenerates = 0;
    for (size_t si = 0; si < n_states; ++si) {
      matches += match[si * n_combos + k];
      degenerates += degen[si * n_combos + k];
    }
    row.agreement = static_cast<double>(matches) / static_cast<double>(n_states);
    row.n_degenerate = static_cast<int>(degenerates);
    rows.push_back(row);
  }
  return rows;
}

// --------------------------------------------- counterfactual reachability

std::vector<CounterfactualRow> counterfactual_reachability(
    const QNetwork& net, const std::vector<GridState>& states,
    ReachKind reach_kind, double baseline, int threads) {
  if (states.empty()) {
    throw EmptySampleError("counterfactual_reachability: no states");
  }
  struct StateCounts {
    std::vector<std::pair<double, bool>> distance_changed;
  };
  std::vector<StateCounts> per_state(states.size());

  parallel_for(static_cast<int>(states.size()), threads, [&](int si) {
    const GridState& s = states[static_cast<size_t>(si)];
    std::vector<double> input = s.to_tensor();
    const std::vector<Action> legal = legal_actions_from_frame(s);
    const Action truth = policy_action(net, input, legal);
    const ReachabilityMap reach = reachability(s, reach_kind);
    const Partition part = default_partition(s);

    // Group features by exact reachability value.
    std::map<double, std::vector<int>> groups;
    for (const std::vector<int>& p : part.parts) {
      for (int i : p) {
        groups[reach.values[static_cast<size_t>(i)]].push_back(i);
      }
    }
    std::vector<double> pert = input;
    for (const auto& [dist, features] : groups) {
      for (int i : features) pert[static_cast<size_t>(i)] = baseline;
      const Action changed_action = policy_action(net, pert, legal);
      per_state[static_cast<size_t>(si)].distance_changed.emplace_back(
          dist, changed_action != truth);
      for (int i : features) pert[static_cast<size_t>(i)] = input[static_cast<size_t>(i)];
    }
  });

  std::map<double, std::pair<int, int>> tally;  // distance -> (states, changed)
  for (const StateCounts& sc : per_state) {
    for (const auto& [dist, changed] : sc.distance_changed) {
      auto& [n, ch] = tally[dist];
      n += 1;
      ch += changed;
    }
  }
  std::vector<CounterfactualRow> rows;
  for (const auto& [dist, counts] : tally) {
    CounterfactualRow row;
    row.distance = dist;
    row.n_states_with_features = counts.first;
    row.change_fraction =
        static_cast<double>(counts.second) / static_cast<double>(counts.first);
    rows.push_back(row);
  }
  return rows;
}

// --------------------------------------------------------- training monitor

std::vector<AgreementRow> training_monitor(
    const std::vector<StagedCheckpoint>& checkpoints, const Layout& layout,
    const SweepSpec& spec, const CollectOptions& collect, uint64_t seed,
    size_t max_states) {
  std::vector<AgreementRow> all;
  for (size_t c = 0; c < checkpoints.size(); ++c) {
    const StagedCheckpoint& ck = checkpoints[c];
    const std::vector<GridState> states = subsample_states(
        collect_states(ck.net, layout, Rng::derive(seed, c).next_u64(),
                       collect),
        max_states);
    std::vector<AgreementRow> rows = lambda_sweep(ck.net, states, spec);
    for (AgreementRow& row : rows) {
      row.checkpoint = ck.label;
      all.push_back(std::move(row));
    }
  }
  return all;
}

// ------------------------------------------------------------- CSV output

namespace {

std::string channel_cell(const std::optional<Channel>& c) {
  return c ? channel_name(*c) : "all";
}

std::vector<std::string> agreement_cells(const AgreementRow& r) {
  return {method_name(r.method),
          reconstructor_name(r.rec),
          channel_cell(r.channel),
          stage_name(r.stage),
          CsvWriter::num(r.param),
          CsvWriter::num(r.agreement),
          CsvWriter::num(r.n_states),
          CsvWriter::num(r.n_degenerate)};
}

}  // namespace

void write_agreement_csv(const std::string& path,
                         const std::vector<AgreementRow>& rows) {
  CsvWriter csv(path, {"method", "reconstructor", "channel", "stage", "param",
                       "agreement", "n_states", "n_degenerate"});
  for (const AgreementRow& r : rows) csv.row(agreement_cells(r));
}

void write_monitor_csv(const std::string& path,
                       const std::vector<AgreementRow>& rows) {
  CsvWriter csv(path, {"checkpoint", "method", "reconstructor", "channel",
                       "stage", "param", "agreement", "n_states",
                       "n_degenerate"});
  for (const AgreementRow& r : rows) {
    std::vector<std::string> cells = agreement_cells(r);
    cells.insert(cells.begin(), r.checkpoint);
    csv.row(cells);
  }
}

void write_counterfactual_csv(const std::string& path,
                              const std::vector<CounterfactualRow>& rows) {
  CsvWriter csv(path, {"distance", "n_states_with_features",
                       "change_fraction"});
  for (const CounterfactualRow& r : rows) {
    csv.row({CsvWriter::num(r.distance), CsvWriter::num(r.n_states_with_features),
             CsvWriter::num(r.change_fraction)});
  }
}

}  // namespace rlx
