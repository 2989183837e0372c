#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rlx/checkpoint.hpp"
#include "rlx/gridworld.hpp"
#include "rlx/qnetwork.hpp"
#include "rlx/rng.hpp"

namespace rlx {

// ------------------------------------------------------------------ replay

class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity) : capacity_(capacity) {}

  void push(Transition tr);
  size_t size() const { return data_.size(); }
  size_t capacity() const { return capacity_; }
  // One uniform draw. Throws EmptySampleError when empty.
  const Transition& sample(Rng& rng) const;
  // n uniform draws without replacement (repeats only when fewer than n
  // transitions are stored). Throws EmptySampleError when empty.
  void sample_batch(Rng& rng, int n,
                    std::vector<const Transition*>& out) const;

 private:
  size_t capacity_;
  size_t next_ = 0;
  std::vector<Transition> data_;
};

// -------------------------------------------------------------- optimizer

class Adam {
 public:
  Adam(double lr, size_t n_params, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  // One update over parameter/gradient span pairs laid end-to-end in the
  // fixed parameter-view order; their total length must equal n_params.
  void step(
      const std::vector<std::pair<std::span<double>, std::span<const double>>>&
          layers);
  long updates() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

// ---------------------------------------------------------------- training

struct TrainConfig {
  long total_steps = 200000;
  double gamma = 0.95;
  double learning_rate = 2.5e-4;
  int batch_size = 32;
  int replay_capacity = 10000;
  int warmup_steps = 5000;       // no updates before this many env steps
  int target_sync_period = 1000;
  double eps_start = 1.0;
  double eps_end = 0.05;
  long eps_decay_steps = -1;     // -1: 10% of total_steps
  int max_episode_steps = rules::kDefaultMaxSteps;
  int random_start_steps = 6;    // up to this many random moves after reset
  int eval_every = 5000;
  int eval_matches = 40;
  int final_eval_matches = 100;
  double stop_at_success = -1.0;  // >= 0: stop once an eval reaches this
  std::vector<double> checkpoint_thresholds{0.0, 0.10, 0.50, 0.80};
  uint64_t seed = 0;

  long effective_eps_decay_steps() const {
    return eps_decay_steps >= 0 ? eps_decay_steps : total_steps / 10;
  }
  double epsilon_at(long step) const;

  std::map<std::string, std::string> to_key_values() const;
  static TrainConfig from_key_values(
      const std::map<std::string, std::string>& kv);
};

struct EvalStats {
  double success_rate = 0.0;
  double mean_score = 0.0;
  double mean_steps = 0.0;
  int n_matches = 0;
};

struct EvalOptions {
  int random_start_steps = 6;
  int max_episode_steps = rules::kDefaultMaxSteps;
  int threads = 1;
};

// Greedy evaluation over n_matches independent matches. Each match starts
// with a seeded burst of random legal moves (its own derived stream) so the
// deterministic dynamics still produce distinct matches; the aggregate is
// independent of evaluation order and thread count.
EvalStats evaluate_policy(const QNetwork& net, const Layout& layout,
                          int n_matches, uint64_t seed,
                          const EvalOptions& opts = {});

struct StagedCheckpoint {
  std::string label;  // "random", "sr0", "sr10", ..., "final"
  long step = 0;
  double success_rate = 0.0;
  QNetwork net;
};

struct TrainLogRow {
  long step = 0;
  double loss = 0.0;      // mean since the previous row
  double epsilon = 0.0;
  double eval_success_rate = -1.0;  // < 0: no eval at this row
};

struct TrainResult {
  std::vector<StagedCheckpoint> checkpoints;
  std::vector<TrainLogRow> log;
  double final_success_rate = 0.0;
  long steps_run = 0;
};

// Deep Q-learning with experience replay and a periodically synchronized
// target network. Throws DivergedLossError if the loss becomes non-finite.
// When `out_dir` is non-empty, writes ckpt_<label>.rlxq files and
// training_log.csv there as the run progresses; `on_row` (if set) sees every
// log row as it is produced.
TrainResult train(const Layout& layout, const TrainConfig& config,
                  const std::string& out_dir = "",
                  const std::function<void(const TrainLogRow&)>& on_row = {});

std::string checkpoint_filename(const std::string& label);
void write_training_log(const std::string& path,
                        const std::vector<TrainLogRow>& rows);

}  // namespace rlx
