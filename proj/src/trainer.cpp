#include "rlx/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <mutex>

#include "rlx/csv.hpp"
#include "rlx/error.hpp"
#include "rlx/parallel.hpp"

namespace rlx {

// ------------------------------------------------------------------ replay

void ReplayBuffer::push(Transition tr) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(tr));
  } else {
    data_[next_] = std::move(tr);
  }
  next_ = (next_ + 1) % capacity_;
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
  if (data_.empty()) throw EmptySampleError("replay: buffer is empty");
  return data_[static_cast<size_t>(rng.below(data_.size()))];
}

void ReplayBuffer::sample_batch(Rng& rng, int n,
                                std::vector<const Transition*>& out) const {
  if (data_.empty()) throw EmptySampleError("replay: buffer is empty");
  out.clear();
  const bool distinct = data_.size() >= static_cast<size_t>(n);
  std::vector<uint32_t> picked;
  for (int i = 0; i < n; ++i) {
    uint32_t idx;
    do {
      idx = static_cast<uint32_t>(rng.below(data_.size()));
    } while (distinct &&
             std::find(picked.begin(), picked.end(), idx) != picked.end());
    picked.push_back(idx);
    out.push_back(&data_[idx]);
  }
}

// -------------------------------------------------------------- optimizer

Adam::Adam(double lr, size_t n_params, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(n_params, 0.0), v_(n_params, 0.0) {}

void Adam::step(
    const std::vector<std::pair<std::span<double>, std::span<const double>>>&
        layers) {
  t_ += 1;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  size_t off = 0;
  for (const auto& [params, grads] : layers) {
    double* m = m_.data() + off;
    double* v = v_.data() + off;
    double* p = params.data();
    const double* g = grads.data();
    const size_t n = params.size();
    if (grads.size() != n || off + n > m_.size()) {
      throw ShapeMismatchError("adam: layer sizes do not match state");
    }
    for (size_t i = 0; i < n; ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
    off += n;
  }
  if (off != m_.size()) {
    throw ShapeMismatchError("adam: layer sizes do not cover state");
  }
}

// ----------------------------------------------------------------- config

double TrainConfig::epsilon_at(long step) const {
  const long decay = effective_eps_decay_steps();
  if (decay <= 0 || step >= decay) return eps_end;
  const double frac = static_cast<double>(step) / static_cast<double>(decay);
  return eps_start + frac * (eps_end - eps_start);
}

std::map<std::string, std::string> TrainConfig::to_key_values() const {
  std::map<std::string, std::string> kv;
  kv["total_steps"] = std::to_string(total_steps);
  kv["gamma"] = CsvWriter::num(gamma);
  kv["learning_rate"] = CsvWriter::num(learning_rate);
  kv["batch_size"] = std::to_string(batch_size);
  kv["replay_capacity"] = std::to_string(replay_capacity);
  kv["warmup_steps"] = std::to_string(warmup_steps);
  kv["target_sync_period"] = std::to_string(target_sync_period);
  kv["eps_start"] = CsvWriter::num(eps_start);
  kv["eps_end"] = CsvWriter::num(eps_end);
  kv["eps_decay_steps"] = std::to_string(eps_decay_steps);
  kv["max_episode_steps"] = std::to_string(max_episode_steps);
  kv["random_start_steps"] = std::to_string(random_start_steps);
  kv["eval_every"] = std::to_string(eval_every);
  kv["eval_matches"] = std::to_string(eval_matches);
  kv["final_eval_matches"] = std::to_string(final_eval_matches);
  kv["stop_at_success"] = CsvWriter::num(stop_at_success);
  std::string th;
  for (double t : checkpoint_thresholds) {
    if (!th.empty()) th.push_back(';');
    th += CsvWriter::num(t);
  }
  kv["checkpoint_thresholds"] = th;
  kv["seed"] = std::to_string(seed);
  return kv;
}

TrainConfig TrainConfig::from_key_values(
    const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  auto get = [&](const char* key, auto parse, auto& out) {
    auto it = kv.find(key);
    if (it != kv.end()) out = parse(it->second);
  };
  auto to_l = [](const std::string& s) { return std::stol(s); };
  auto to_i = [](const std::string& s) { return std::stoi(s); };
  auto to_d = [](const std::string& s) { return std::stod(s); };
  auto to_u = [](const std::string& s) { return std::stoull(s); };
  get("total_steps", to_l, c.total_steps);
  get("gamma", to_d, c.gamma);
  get("learning_rate", to_d, c.learning_rate);
  get("batch_size", to_i, c.batch_size);
  get("replay_capacity", to_i, c.replay_capacity);
  get("warmup_steps", to_i, c.warmup_steps);
  get("target_sync_period", to_i, c.target_sync_period);
  get("eps_start", to_d, c.eps_start);
  get("eps_end", to_d, c.eps_end);
  get("eps_decay_steps", to_l, c.eps_decay_steps);
  get("max_episode_steps", to_i, c.max_episode_steps);
  get("random_start_steps", to_i, c.random_start_steps);
  get("eval_every", to_i, c.eval_every);
  get("eval_matches", to_i, c.eval_matches);
  get("final_eval_matches", to_i, c.final_eval_matches);
  get("stop_at_success", to_d, c.stop_at_success);
  get("seed", to_u, c.seed);
  auto it = kv.find("checkpoint_thresholds");
  if (it != kv.end()) {
    c.checkpoint_thresholds.clear();
    std::string tok;
    for (char ch : it->second + ";") {
      if (ch == ';') {
        if (!tok.empty()) c.checkpoint_thresholds.push_back(std::stod(tok));
        tok.clear();
      } else {
        tok.push_back(ch);
      }
    }
  }
  return c;
}

// ------------------------------------------------------------- evaluation

namespace {

// Plays the seeded random-start burst (0..random_start_steps legal moves).
// Deterministic dynamics would otherwise make every greedy match identical.
GridState play_random_start(const GridWorld& world, GridState s, Rng& rng,
                            int random_start_steps) {
  const int burst = static_cast<int>(
      rng.below(static_cast<uint64_t>(random_start_steps) + 1));
  for (int i = 0; i < burst && s.terminal == Terminal::None; ++i) {
    std::vector<Action> legal = world.legal_actions(s);
    if (legal.empty()) break;
    Action a = legal[static_cast<size_t>(rng.below(legal.size()))];
    s = world.step(s, a).next_state;
  }
  return s;
}

struct MatchOutcome {
  bool win = false;
  double score = 0.0;
  int steps = 0;
};

MatchOutcome play_greedy_match(const QNetwork& net, const GridWorld& world,
                               uint64_t seed, uint64_t match_index,
                               int random_start_steps) {
  Rng rng = Rng::derive(seed, match_index);
  GridState s = play_random_start(world, world.reset(), rng,
                                  random_start_steps);
  std::vector<double> input(static_cast<size_t>(net.input_size()));
  while (s.terminal == Terminal::None) {
    s.to_tensor(input.data());
    std::vector<Action> legal = world.legal_actions(s);
    Action a = policy_action(net, input, legal);
    s = world.step(s, a).next_state;
  }
  return {s.terminal == Terminal::Win, s.score, s.step_count};
}

}  // namespace

EvalStats evaluate_policy(const QNetwork& net, const Layout& layout,
                          int n_matches, uint64_t seed,
                          const EvalOptions& opts) {
  if (n_matches <= 0) throw EmptySampleError("evaluate_policy: no matches");
  GridWorld world(layout, opts.max_episode_steps);
  std::vector<MatchOutcome> outcomes(static_cast<size_t>(n_matches));
  parallel_for(n_matches, opts.threads, [&](int m) {
    outcomes[static_cast<size_t>(m)] =
        play_greedy_match(net, world, seed, static_cast<uint64_t>(m),
                          opts.random_start_steps);
  });
  EvalStats stats;
  stats.n_matches = n_matches;
  int wins = 0;
  double score = 0.0, steps = 0.0;
  for (const MatchOutcome& o : outcomes) {
    wins += o.win;
    score += o.score;
    steps += o.steps;
  }
  stats.success_rate = static_cast<double>(wins) / n_matches;
  stats.mean_score = score / n_matches;
  stats.mean_steps = steps / n_matches;
  return stats;
}

// ---------------------------------------------------------------- training

namespace {

double huber(double e) {
  const double a = std::fabs(e);
  return a <= 1.0 ? 0.5 * e * e : a - 0.5;
}

std::vector<std::pair<std::span<double>, std::span<const double>>>
layer_pairs(QNetwork& net, Gradients& grads) {
  std::vector<ParamView> views = net.param_views();
  auto gviews = grads.views();
  std::vector<std::pair<std::span<double>, std::span<const double>>> out;
  out.reserve(views.size());
  for (size_t i = 0; i < views.size(); ++i) {
    out.emplace_back(std::span<double>(views[i].data, views[i].size),
                     std::span<const double>(gviews[i].second));
  }
  return out;
}

}  // namespace

std::string checkpoint_filename(const std::string& label) {
  return "ckpt_" + label + ".rlxq";
}

void write_training_log(const std::string& path,
                        const std::vector<TrainLogRow>& rows) {
  CsvWriter csv(path, {"step", "loss", "epsilon", "eval_success_rate"});
  for (const TrainLogRow& r : rows) {
    csv.row({CsvWriter::num(r.step), CsvWriter::num(r.loss),
             CsvWriter::num(r.epsilon),
             r.eval_success_rate < 0.0 ? std::string()
                                       : CsvWriter::num(r.eval_success_rate)});
  }
}

TrainResult train(const Layout& layout, const TrainConfig& config,
                  const std::string& out_dir,
                  const std::function<void(const TrainLogRow&)>& on_row) {
  if (config.batch_size < 1 || config.replay_capacity < config.batch_size) {
    throw Error("train: replay capacity must hold at least one batch");
  }
  GridWorld world(layout, config.max_episode_steps);
  Rng init_rng = Rng::derive(config.seed, 0xA11);
  Rng explore_rng = Rng::derive(config.seed, 0xB22);
  Rng replay_rng = Rng::derive(config.seed, 0xC33);

  TrainResult result;
  QNetwork net = QNetwork::init(layout.width, layout.height, init_rng);
  QNetwork target = net;
  Adam adam(config.learning_rate, net.param_count());
  Gradients grads = Gradients::zeros_like(net);
  ReplayBuffer replay(static_cast<size_t>(config.replay_capacity));

  auto emit = [&](const std::string& label, long step, double rate) {
    StagedCheckpoint ck;
    ck.label = label;
    ck.step = step;
    ck.success_rate = rate;
    ck.net = net;
    if (!out_dir.empty()) {
      std::map<std::string, std::string> meta = config.to_key_values();
      meta["label"] = label;
      meta["step"] = std::to_string(step);
      meta["success_rate"] = rate < 0.0 ? "" : CsvWriter::num(rate);
      save_checkpoint(
          (std::filesystem::path(out_dir) / checkpoint_filename(label))
              .string(),
          net, meta);
    }
    result.checkpoints.push_back(std::move(ck));
  };

  emit("random", 0, -1.0);

  std::vector<uint8_t> threshold_emitted(config.checkpoint_thresholds.size(),
                                         0);
  const size_t in_n = static_cast<size_t>(net.input_size());
  std::vector<double> input(in_n);
  const int B = config.batch_size;
  std::vector<double> batch_in(in_n * B), batch_next(in_n * B);
  std::vector<double> batch_dq(static_cast<size_t>(B) * kNumActions);
  std::vector<const Transition*> batch_refs(static_cast<size_t>(B));
  BatchTrace online_bt, target_bt;

  long t = 0;
  double loss_sum = 0.0;
  long loss_count = 0;
  bool stop = false;
  uint64_t episode = 0;

  while (!stop && t < config.total_steps) {
    Rng ep_rng = Rng::derive(config.seed ^ 0xE9150DE5ULL, episode);
    ++episode;
    GridState s = world.reset();
    int warmup_left = static_cast<int>(
        ep_rng.below(static_cast<uint64_t>(config.random_start_steps) + 1));

    while (s.terminal == Terminal::None && !stop && t < config.total_steps) {
      const double eps = config.epsilon_at(t);
      ++t;
      std::vector<Action> legal = world.legal_actions(s);
      Action a;
      if (warmup_left > 0) {
        a = legal[static_cast<size_t>(ep_rng.below(legal.size()))];
        --warmup_left;
      } else if (explore_rng.uniform() < eps) {
        a = legal[static_cast<size_t>(explore_rng.below(legal.size()))];
      } else {
        s.to_tensor(input.data());
        a = policy_action(net, input, legal);
      }
      Transition tr = world.step(s, a);
      s = tr.next_state;
      replay.push(std::move(tr));

      if (t > config.warmup_steps) {
        grads.clear();
        replay.sample_batch(replay_rng, B, batch_refs);
        for (int b = 0; b < B; ++b) {
          const Transition& sample = *batch_refs[static_cast<size_t>(b)];
          sample.state.to_tensor(batch_in.data() + in_n * b);
          // Terminal samples never read their target Q; feeding the current
          // state keeps the batch rectangular.
          (sample.done ? sample.state : sample.next_state)
              .to_tensor(batch_next.data() + in_n * b);
        }
        forward_batch(target, batch_next, B, target_bt);
        forward_batch(net, batch_in, B, online_bt);

        double batch_loss = 0.0;
        std::fill(batch_dq.begin(), batch_dq.end(), 0.0);
        for (int b = 0; b < B; ++b) {
          const Transition& sample = *batch_refs[static_cast<size_t>(b)];
          double y = sample.reward;
          if (!sample.done) {
            const double* qn =
                target_bt.q.data() + static_cast<size_t>(b) * kNumActions;
            y += config.gamma * *std::max_element(qn, qn + kNumActions);
          }
          const double q_sa =
              online_bt.q[static_cast<size_t>(b) * kNumActions +
                          static_cast<size_t>(sample.action)];
          const double e = q_sa - y;
          batch_loss += huber(e);
          batch_dq[static_cast<size_t>(b) * kNumActions +
                   static_cast<size_t>(sample.action)] =
              std::clamp(e, -1.0, 1.0) / B;
        }
        backward_params_batch(net, online_bt, batch_dq, grads);
        batch_loss /= B;
        if (!std::isfinite(batch_loss)) {
          throw DivergedLossError("train: loss diverged at step " +
                                  std::to_string(t));
        }
        loss_sum += batch_loss;
        loss_count += 1;
        adam.step(layer_pairs(net, grads));
      }

      if (t % config.target_sync_period == 0) target = net;

      if (t % config.eval_every == 0) {
        EvalOptions eopts;
        eopts.random_start_steps = config.random_start_steps;
        eopts.max_episode_steps = config.max_episode_steps;
        const EvalStats stats =
            evaluate_policy(net, layout, config.eval_matches,
                            Rng::derive(config.seed, 0xEA1 + t * 2).next_u64(),
                            eopts);
        TrainLogRow row;
        row.step = t;
        row.loss = loss_count ? loss_sum / loss_count : 0.0;
        row.epsilon = config.epsilon_at(t);
        row.eval_success_rate = stats.success_rate;
        result.log.push_back(row);
        if (on_row) on_row(row);
        if (!out_dir.empty()) {
          // Rewritten in full each eval so a long run can be watched.
          write_training_log(
              (std::filesystem::path(out_dir) / "training_log.csv").string(),
              result.log);
        }
        loss_sum = 0.0;
        loss_count = 0;
        for (size_t i = 0; i < config.checkpoint_thresholds.size(); ++i) {
          if (!threshold_emitted[i] &&
              stats.success_rate >= config.checkpoint_thresholds[i]) {
            threshold_emitted[i] = 1;
            const int pct = static_cast<int>(
                std::lround(config.checkpoint_thresholds[i] * 100.0));
            emit("sr" + std::to_string(pct), t, stats.success_rate);
          }
        }
        if (config.stop_at_success >= 0.0 &&
            stats.success_rate >= config.stop_at_success) {
          stop = true;
        }
      }
    }
  }

  EvalOptions final_opts;
  final_opts.random_start_steps = config.random_start_steps;
  final_opts.max_episode_steps = config.max_episode_steps;
  const EvalStats final_stats =
      evaluate_policy(net, layout, config.final_eval_matches,
                      Rng::derive(config.seed, 0xF1A1).next_u64(), final_opts);
  result.final_success_rate = final_stats.success_rate;
  result.steps_run = t;
  emit("final", t, final_stats.success_rate);

  if (!out_dir.empty()) {
    write_training_log(
        (std::filesystem::path(out_dir) / "training_log.csv").string(),
        result.log);
  }
  return result;
}

}  // namespace rlx
