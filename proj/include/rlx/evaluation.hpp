#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rlx/reconstruction.hpp"
#include "rlx/trainer.hpp"

namespace rlx {

// -------------------------------------------------------- state collection

struct CollectOptions {
  int n_matches = 30;
  int random_start_steps = 6;
  int max_episode_steps = rules::kDefaultMaxSteps;
  int threads = 1;
};

// Greedy on-policy states (the state before every action, after the seeded
// random-start burst) from n_matches matches, concatenated in match order.
std::vector<GridState> collect_states(const QNetwork& net,
                                      const Layout& layout, uint64_t seed,
                                      const CollectOptions& opts = {});

// Deterministic even-stride subsample preserving order; returns all states
// when max_states == 0 or size <= max_states.
std::vector<GridState> subsample_states(std::vector<GridState> states,
                                        size_t max_states);

// ---------------------------------------------------------------- agreement

struct AgreementStat {
  double agreement = 0.0;  // fraction of states reconstructed correctly
  int n_states = 0;
  int n_degenerate = 0;    // empty-vote states, counted as disagreements
};

struct AgreementOptions {
  MethodParams params;
  ReachKind reach = ReachKind::L1;
  int threads = 1;
};

// Fraction of states where the reconstructor output equals the greedy
// policy action. Throws EmptySampleError when `states` is empty.
AgreementStat agreement(const QNetwork& net,
                        const std::vector<GridState>& states, Method method,
                        Stage stage, const Reconstructor& rec,
                        std::optional<Channel> channel = {},
                        const AgreementOptions& opts = {});

// ------------------------------------------------------------ lambda sweep

struct SweepSpec {
  std::vector<Method> methods = all_methods();
  std::vector<Stage> stages{Stage::PostSoftmax};
  std::vector<double> lambdas;            // LAR grid (lambda_norm values)
  std::vector<double> kar_bs;             // KAR kernel offsets (optional)
  std::vector<std::optional<Channel>> channels{std::nullopt};
  MethodParams params;
  ReachKind reach = ReachKind::L1;
  int threads = 1;
};

// 21 evenly spaced points covering [0, 1].
std::vector<double> default_lambda_grid();

struct AgreementRow {
  std::string checkpoint;  // filled by training_monitor, empty otherwise
  Method method = Method::SM;
  Stage stage = Stage::PostSoftmax;
  ReconstructorKind rec = ReconstructorKind::LAR;
  std::optional<Channel> channel;
  double param = 0.0;      // lambda_norm (LAR) or kernel b (KAR)
  double agreement = 0.0;
  int n_states = 0;
  int n_degenerate = 0;
};

// Agreement for every (method, stage, channel, reconstructor-parameter)
// combination, sharing one behavior map per state and combination of method
// and stage. SARFA is post-softmax by definition and appears once even if
// both stages are requested.
std::vector<AgreementRow> lambda_sweep(const QNetwork& net,
                                       const std::vector<GridState>& states,
                                       const SweepSpec& spec);

// --------------------------------------------- counterfactual reachability

struct CounterfactualRow {
  double distance = 0.0;
  int n_states_with_features = 0;
  double change_fraction = 0.0;  // states whose greedy action changed
};

// For every state and reachability value d: jointly perturb all active
// non-wall current-frame features at distance exactly d to `baseline` and
// test whether the greedy action changes. Rows are sorted by distance.
std::vector<CounterfactualRow> counterfactual_reachability(
    const QNetwork& net, const std::vector<GridState>& states,
    ReachKind reach = ReachKind::L1, double baseline = 0.0, int threads = 1);

// --------------------------------------------------------- training monitor

// Runs lambda_sweep per checkpoint on states collected with that
// checkpoint's own policy (capped at max_states when nonzero); rows carry
// the checkpoint label.
std::vector<AgreementRow> training_monitor(
    const std::vector<StagedCheckpoint>& checkpoints, const Layout& layout,
    const SweepSpec& spec, const CollectOptions& collect, uint64_t seed,
    size_t max_states = 0);

// ------------------------------------------------------------- CSV output

// Schema: method,reconstructor,channel,stage,param,agreement,n_states,
// n_degenerate. `channel` is "all" when unmasked.
void write_agreement_csv(const std::string& path,
                         const std::vector<AgreementRow>& rows);

// Same schema with a leading `checkpoint` column.
void write_monitor_csv(const std::string& path,
                       const std::vector<AgreementRow>& rows);

// Schema: distance,n_states_with_features,change_fraction.
void write_counterfactual_csv(const std::string& path,
                              const std::vector<CounterfactualRow>& rows);

}  // namespace rlx
