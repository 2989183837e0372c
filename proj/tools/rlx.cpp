// rlx: train binary Pac-Man DQN agents, explain their decisions with
// feature attributions, reconstruct actions from explanations, and measure
// how well the explanations predict the policy.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rlx/checkpoint.hpp"
#include "rlx/csv.hpp"
#include "rlx/error.hpp"
#include "rlx/evaluation.hpp"
#include "rlx/manifest.hpp"
#include "rlx/parallel.hpp"
#include "rlx/render.hpp"
#include "rlx/temporal.hpp"
#include "rlx/trainer.hpp"
#include "rlx/trajectory.hpp"

namespace fs = std::filesystem;
using namespace rlx;

namespace {

int dispatch(const std::vector<std::string>& argv, int depth);

// ----------------------------------------------------------------- helpers

void ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory: " + out);
}

void save_manifest(const std::string& out, const std::string& command,
                   const std::vector<std::string>& args) {
  RunManifest m;
  m.version = kVersion;
  m.command = command;
  m.args = args;
  write_manifest((fs::path(out) / kManifestFilename).string(), m);
}

std::vector<double> parse_range(const std::string& text) {
  // "start:end:count" or a comma-separated list of values.
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double start = 0, end = 0;
    long count = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%ld", &start, &end, &count) != 3 ||
        count < 1) {
      throw UsageError("bad range '" + text + "', expected start:end:count");
    }
    for (long i = 0; i < count; ++i) {
      out.push_back(count == 1 ? start
                               : start + (end - start) * i / (count - 1));
    }
    return out;
  }
  std::string tok;
  for (char c : text + ",") {
    if (c == ',') {
      if (!tok.empty()) out.push_back(std::stod(tok));
      tok.clear();
    } else {
      tok.push_back(c);
    }
  }
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string tok;
  for (char c : text + ",") {
    if (c == ',') {
      if (!tok.empty()) out.push_back(tok);
      tok.clear();
    } else {
      tok.push_back(c);
    }
  }
  return out;
}

std::vector<Method> parse_methods(const std::string& text) {
  if (text == "all") return all_methods();
  std::vector<Method> out;
  for (const std::string& name : split_list(text)) {
    Method m;
    if (!method_from_name(name, &m)) {
      throw UsageError("unknown method '" + name + "'");
    }
    out.push_back(m);
  }
  return out;
}

std::vector<Stage> parse_stages(const std::string& text) {
  std::vector<Stage> out;
  for (const std::string& name : split_list(text)) {
    Stage s;
    if (!stage_from_name(name, &s)) {
      throw UsageError("unknown stage '" + name + "'");
    }
    out.push_back(s);
  }
  return out;
}

std::vector<std::optional<Channel>> parse_channels(const std::string& text) {
  std::vector<std::optional<Channel>> out;
  for (const std::string& name : split_list(text)) {
    if (name == "all") {
      out.push_back(std::nullopt);
      continue;
    }
    Channel c;
    if (!channel_from_name(name, &c)) {
      throw UsageError("unknown channel '" + name + "'");
    }
    out.push_back(c);
  }
  return out;
}

ReachKind parse_reach(const std::string& text) {
  ReachKind k;
  if (!reach_from_name(text, &k)) {
    throw UsageError("unknown reachability '" + text + "' (l1 or l2)");
  }
  return k;
}

Checkpoint load_net(const std::string& path) { return load_checkpoint(path); }

// Greedy match with the same seeding as collect_states; returns the state
// before step `step` of match `match`.
GridState state_at(const QNetwork& net, const Layout& layout, uint64_t seed,
                   int match, int step, int random_start_steps) {
  GridWorld world(layout);
  Rng rng = Rng::derive(seed, static_cast<uint64_t>(match));
  GridState s = world.reset();
  const int burst = static_cast<int>(
      rng.below(static_cast<uint64_t>(random_start_steps) + 1));
  for (int i = 0; i < burst && s.terminal == Terminal::None; ++i) {
    std::vector<Action> legal = world.legal_actions(s);
    s = world.step(s, legal[static_cast<size_t>(rng.below(legal.size()))])
            .next_state;
  }
  std::vector<double> input(static_cast<size_t>(net.input_size()));
  for (int t = 0; t < step; ++t) {
    if (s.terminal != Terminal::None) {
      throw UsageError("match " + std::to_string(match) + " ended after " +
                       std::to_string(t) + " steps, cannot reach step " +
                       std::to_string(step));
    }
    s.to_tensor(input.data());
    s = world.step(s, policy_action(net, input, world.legal_actions(s)))
            .next_state;
  }
  if (s.terminal != Terminal::None) {
    throw UsageError("state at step " + std::to_string(step) + " is terminal");
  }
  return s;
}

void write_attribution_csv(const std::string& path, const GridState& s,
                           const AttributionMap& map) {
  CsvWriter csv(path, {"feature_index", "frame", "channel", "x", "y", "value",
                       "score"});
  for (int i = 0; i < s.feature_count(); ++i) {
    int sc, x, y;
    s.feature_coords(i, &sc, &x, &y);
    const int frame = sc / kChannelsPerFrame;
    const Channel ch = static_cast<Channel>(sc % kChannelsPerFrame);
    csv.row({CsvWriter::num(i), CsvWriter::num(frame), channel_name(ch),
             CsvWriter::num(x), CsvWriter::num(y),
             CsvWriter::num(static_cast<long>(
                 s.frames[static_cast<size_t>(frame)]
                         [static_cast<size_t>(i % s.frame_size())])),
             CsvWriter::num(map.scores[static_cast<size_t>(i)])});
  }
}

void write_behavior_csv(const std::string& path, const GridState& s,
                        const BehaviorMap& map) {
  CsvWriter csv(path, {"feature_index", "frame", "channel", "x", "y", "label",
                       "win_score"});
  for (int i = 0; i < s.feature_count(); ++i) {
    int sc, x, y;
    s.feature_coords(i, &sc, &x, &y);
    const int frame = sc / kChannelsPerFrame;
    const Channel ch = static_cast<Channel>(sc % kChannelsPerFrame);
    const int8_t label = map.labels[static_cast<size_t>(i)];
    csv.row({CsvWriter::num(i), CsvWriter::num(frame), channel_name(ch),
             CsvWriter::num(x), CsvWriter::num(y),
             label == kNoLabel ? "none"
                               : action_name(static_cast<Action>(label)),
             CsvWriter::num(map.win_scores[static_cast<size_t>(i)])});
  }
}

// --------------------------------------------------------------- commands

struct CommonStateArgs {
  std::string checkpoint;
  std::string layout_path;
  uint64_t seed = 0;
  int match = 0;
  int step = 0;
  int random_starts = 6;
};

void add_state_selection(CLI::App* cmd, CommonStateArgs& a) {
  cmd->add_option("--checkpoint", a.checkpoint, "network checkpoint (.rlxq)")
      ->required();
  cmd->add_option("--layout", a.layout_path, "maze layout (.lay)")->required();
  cmd->add_option("--seed", a.seed, "rollout seed");
  cmd->add_option("--match", a.match, "greedy match index");
  cmd->add_option("--step", a.step, "step within the match");
  cmd->add_option("--random-starts", a.random_starts,
                  "max random moves after reset");
}

std::vector<std::string> state_selection_args(const CommonStateArgs& a) {
  return {"--checkpoint=" + a.checkpoint, "--layout=" + a.layout_path,
          "--seed=" + std::to_string(a.seed),
          "--match=" + std::to_string(a.match),
          "--step=" + std::to_string(a.step),
          "--random-starts=" + std::to_string(a.random_starts)};
}

int cmd_train(const std::string& layout_path, const TrainConfig& cfg,
              const std::string& out) {
  ensure_out_dir(out);
  const Layout layout = Layout::load_file(layout_path);
  const std::vector<std::string> args = {
      "--layout=" + layout_path,
      "--total-steps=" + std::to_string(cfg.total_steps),
      "--gamma=" + CsvWriter::num(cfg.gamma),
      "--learning-rate=" + CsvWriter::num(cfg.learning_rate),
      "--batch-size=" + std::to_string(cfg.batch_size),
      "--replay-capacity=" + std::to_string(cfg.replay_capacity),
      "--warmup-steps=" + std::to_string(cfg.warmup_steps),
      "--target-sync-period=" + std::to_string(cfg.target_sync_period),
      "--eps-start=" + CsvWriter::num(cfg.eps_start),
      "--eps-end=" + CsvWriter::num(cfg.eps_end),
      "--eps-decay-steps=" + std::to_string(cfg.eps_decay_steps),
      "--max-episode-steps=" + std::to_string(cfg.max_episode_steps),
      "--random-start-steps=" + std::to_string(cfg.random_start_steps),
      "--eval-every=" + std::to_string(cfg.eval_every),
      "--eval-matches=" + std::to_string(cfg.eval_matches),
      "--final-eval-matches=" + std::to_string(cfg.final_eval_matches),
      "--stop-at-success=" + CsvWriter::num(cfg.stop_at_success),
      "--seed=" + std::to_string(cfg.seed)};
  save_manifest(out, "train", args);

  const TrainResult result = train(layout, cfg, out, [](const TrainLogRow& row) {
    std::cout << "step " << row.step << " loss " << row.loss << " eps "
              << row.epsilon;
    if (row.eval_success_rate >= 0.0) {
      std::cout << " success " << row.eval_success_rate;
    }
    std::cout << std::endl;
  });
  std::cout << "final success rate " << result.final_success_rate << " after "
            << result.steps_run << " steps; " << result.checkpoints.size()
            << " checkpoints written to " << out << "\n";
  return 0;
}

int cmd_rollout(const CommonStateArgs& a, int matches, const std::string& out,
                int threads) {
  ensure_out_dir(out);
  const Checkpoint ck = load_net(a.checkpoint);
  const Layout layout = Layout::load_file(a.layout_path);
  std::vector<std::string> args = {
      "--checkpoint=" + a.checkpoint, "--layout=" + a.layout_path,
      "--seed=" + std::to_string(a.seed),
      "--matches=" + std::to_string(matches),
      "--random-starts=" + std::to_string(a.random_starts)};
  save_manifest(out, "rollout", args);

  GridWorld world(layout);
  std::vector<std::vector<TrajectoryRecord>> logs(
      static_cast<size_t>(matches));
  std::vector<Terminal> finals(static_cast<size_t>(matches), Terminal::None);
  parallel_for(matches, threads, [&](int m) {
    Rng rng = Rng::derive(a.seed, static_cast<uint64_t>(m));
    GridState s = world.reset();
    const int burst = static_cast<int>(
        rng.below(static_cast<uint64_t>(a.random_starts) + 1));
    for (int i = 0; i < burst && s.terminal == Terminal::None; ++i) {
      std::vector<Action> legal = world.legal_actions(s);
      s = world.step(s, legal[static_cast<size_t>(rng.below(legal.size()))])
              .next_state;
    }
    std::vector<double> input(static_cast<size_t>(ck.net.input_size()));
    while (s.terminal == Terminal::None) {
      s.to_tensor(input.data());
      const Action act =
          policy_action(ck.net, input, world.legal_actions(s));
      Transition tr = world.step(s, act);
      logs[static_cast<size_t>(m)].push_back({s, act, tr.reward, tr.done});
      s = tr.next_state;
    }
    finals[static_cast<size_t>(m)] = s.terminal;
  });

  CsvWriter summary((fs::path(out) / "summary.csv").string(),
                    {"match", "steps", "score", "result"});
  for (int m = 0; m < matches; ++m) {
    const auto& recs = logs[static_cast<size_t>(m)];
    std::ofstream f(fs::path(out) / ("trajectory_" + std::to_string(m) +
                                     ".log"));
    if (!f) throw IoError("rollout: cannot write trajectory log");
    write_trajectory(f, layout.width, layout.height, recs);
    double score = 0.0;
    for (const auto& r : recs) score += r.reward;
    summary.row({CsvWriter::num(m),
                 CsvWriter::num(static_cast<long>(recs.size())),
                 CsvWriter::num(score),
                 finals[static_cast<size_t>(m)] == Terminal::Win ? "win"
                                                                 : "lose"});
  }
  std::cout << "wrote " << matches << " trajectories to " << out << "\n";
  return 0;
}

int cmd_attribute(const CommonStateArgs& a, const std::string& method_s,
                  const std::string& stage_s, const std::string& action_s,
                  const MethodParams& params, const std::string& render_s,
                  const std::string& out) {
  ensure_out_dir(out);
  const Checkpoint ck = load_net(a.checkpoint);
  const Layout layout = Layout::load_file(a.layout_path);
  const GridState s =
      state_at(ck.net, layout, a.seed, a.match, a.step, a.random_starts);

  Method method;
  if (!method_from_name(method_s, &method)) {
    throw UsageError("unknown method '" + method_s + "'");
  }
  QoI qoi;
  if (!stage_from_name(stage_s, &qoi.stage)) {
    throw UsageError("unknown stage '" + stage_s + "'");
  }
  if (action_s == "auto") {
    qoi.action = policy_action(ck.net, s.to_tensor(),
                               legal_actions_from_frame(s));
  } else if (!action_from_name(action_s, &qoi.action)) {
    throw UsageError("unknown action '" + action_s + "'");
  }
  MethodParams seeded = params;
  seeded.seed = a.seed;

  std::vector<std::string> args = state_selection_args(a);
  args.push_back("--method=" + method_s);
  args.push_back("--stage=" + stage_s);
  args.push_back("--action=" + std::string(action_name(qoi.action)));
  args.push_back("--ig-steps=" + std::to_string(params.ig_steps));
  args.push_back("--sg-samples=" + std::to_string(params.sg_samples));
  args.push_back("--sg-sigma=" + CsvWriter::num(params.sg_sigma));
  args.push_back("--baseline=" + CsvWriter::num(params.baseline));
  if (!render_s.empty()) args.push_back("--render=" + render_s);
  save_manifest(out, "attribute", args);

  const AttributionMap map = attribute(ck.net, s, method, qoi, seeded);
  write_attribution_csv((fs::path(out) / "attribution.csv").string(), s, map);

  for (const std::string& kind : split_list(render_s)) {
    if (kind == "ppm") {
      const AttributionRender r = render_attribution(s, map);
      write_ppm((fs::path(out) / "attribution.ppm").string(), r.image);
      if (r.all_zero) {
        std::cerr << "warning: all attribution scores are zero\n";
      }
    } else if (kind == "svg") {
      std::ofstream f(fs::path(out) / "attribution.svg");
      f << svg_attribution(s, map);
    } else {
      throw UsageError("unknown render kind '" + kind + "'");
    }
  }
  std::cout << "attribution (" << method_s << ", " << stage_s << ", "
            << action_name(qoi.action) << ") written to " << out << "\n";
  return 0;
}

int cmd_reconstruct(const CommonStateArgs& a, const std::string& method_s,
                    const std::string& stage_s, const std::string& rec_s,
                    double lambda, double kernel_b,
                    const std::string& channel_s, const std::string& reach_s,
                    const MethodParams& params, const std::string& render_s,
                    const std::string& out) {
  ensure_out_dir(out);
  const Checkpoint ck = load_net(a.checkpoint);
  const Layout layout = Layout::load_file(a.layout_path);
  const GridState s =
      state_at(ck.net, layout, a.seed, a.match, a.step, a.random_starts);

  Method method;
  if (!method_from_name(method_s, &method)) {
    throw UsageError("unknown method '" + method_s + "'");
  }
  Stage stage;
  if (!stage_from_name(stage_s, &stage)) {
    throw UsageError("unknown stage '" + stage_s + "'");
  }
  ReconstructorKind rk;
  if (!reconstructor_from_name(rec_s, &rk)) {
    throw UsageError("unknown reconstructor '" + rec_s + "'");
  }
  std::optional<Channel> channel;
  if (channel_s != "all") {
    Channel c;
    if (!channel_from_name(channel_s, &c)) {
      throw UsageError("unknown channel '" + channel_s + "'");
    }
    channel = c;
  }
  const ReachKind reach_kind = parse_reach(reach_s);

  std::vector<std::string> args = state_selection_args(a);
  args.push_back("--method=" + method_s);
  args.push_back("--stage=" + stage_s);
  args.push_back("--reconstructor=" + rec_s);
  args.push_back("--lambda=" + CsvWriter::num(lambda));
  args.push_back("--kernel-b=" + CsvWriter::num(kernel_b));
  args.push_back("--channel=" + channel_s);
  args.push_back("--reach=" + reach_s);
  args.push_back("--ig-steps=" + std::to_string(params.ig_steps));
  args.push_back("--sg-samples=" + std::to_string(params.sg_samples));
  args.push_back("--sg-sigma=" + CsvWriter::num(params.sg_sigma));
  args.push_back("--baseline=" + CsvWriter::num(params.baseline));
  if (!render_s.empty()) args.push_back("--render=" + render_s);
  save_manifest(out, "reconstruct", args);

  MethodParams seeded = params;
  seeded.seed = a.seed;
  BehaviorMap map = behavior_map(ck.net, s, method, stage, seeded);
  if (channel) mask_to_channel(map, *channel);
  const ReachabilityMap reach = reachability(s, reach_kind);
  const ReconstructionResult res =
      rk == ReconstructorKind::LAR
          ? limited_action_reconstruction(map, reach, lambda)
          : kernel_action_reconstruction(map, reach, kernel_b);
  const Action truth =
      policy_action(ck.net, s.to_tensor(), legal_actions_from_frame(s));

  write_behavior_csv((fs::path(out) / "behavior.csv").string(), s, map);
  {
    CsvWriter csv((fs::path(out) / "reconstruction.csv").string(),
                  {"action", "policy_action", "agrees", "participating",
                   "degenerate", "support_north", "support_south",
                   "support_east", "support_west"});
    csv.row({action_name(res.action), action_name(truth),
             res.action == truth && !res.degenerate ? "1" : "0",
             CsvWriter::num(res.participating), res.degenerate ? "1" : "0",
             CsvWriter::num(res.support[0]), CsvWriter::num(res.support[1]),
             CsvWriter::num(res.support[2]), CsvWriter::num(res.support[3])});
  }

  for (const std::string& kind : split_list(render_s)) {
    if (kind == "ppm") {
      write_ppm((fs::path(out) / "behavior.ppm").string(),
                render_behavior(s, map, reach,
                                rk == ReconstructorKind::LAR ? lambda : 1.0));
    } else if (kind == "svg") {
      std::ofstream f(fs::path(out) / "behavior.svg");
      f << svg_behavior(s, map, reach,
                        rk == ReconstructorKind::LAR ? lambda : 1.0);
    } else {
      throw UsageError("unknown render kind '" + kind + "'");
    }
  }
  std::cout << "reconstructed action: " << action_name(res.action)
            << " (policy: " << action_name(truth) << ", "
            << (res.degenerate ? "degenerate" : "ok") << ")\n";
  return 0;
}

struct SampleArgs {
  std::string checkpoint;
  std::string layout_path;
  uint64_t seed = 0;
  int matches = 30;
  int max_states = 0;
  int random_starts = 6;
  int threads = 0;
};

void add_sample_args(CLI::App* cmd, SampleArgs& a, bool single_checkpoint) {
  if (single_checkpoint) {
    cmd->add_option("--checkpoint", a.checkpoint, "network checkpoint")
        ->required();
  }
  cmd->add_option("--layout", a.layout_path, "maze layout (.lay)")->required();
  cmd->add_option("--seed", a.seed, "sampling seed");
  cmd->add_option("--matches", a.matches, "greedy matches to sample from");
  cmd->add_option("--max-states", a.max_states,
                  "cap on sampled states (0 = no cap)");
  cmd->add_option("--random-starts", a.random_starts,
                  "max random moves after reset");
  cmd->add_option("--threads", a.threads, "worker threads (0 = auto)");
}

std::vector<std::string> sample_args(const SampleArgs& a,
                                     bool single_checkpoint) {
  std::vector<std::string> out;
  if (single_checkpoint) out.push_back("--checkpoint=" + a.checkpoint);
  out.push_back("--layout=" + a.layout_path);
  out.push_back("--seed=" + std::to_string(a.seed));
  out.push_back("--matches=" + std::to_string(a.matches));
  out.push_back("--max-states=" + std::to_string(a.max_states));
  out.push_back("--random-starts=" + std::to_string(a.random_starts));
  return out;
}

struct SweepArgs {
  std::string methods = "all";
  std::string stages = "post";
  std::string lambdas = "0:1:21";
  std::string kar_bs;
  std::string channels = "all";
  std::string reach = "l1";
  MethodParams params;
};

void add_sweep_args(CLI::App* cmd, SweepArgs& a) {
  cmd->add_option("--methods", a.methods, "comma list or 'all'");
  cmd->add_option("--stages", a.stages, "pre,post");
  cmd->add_option("--lambdas", a.lambdas, "start:end:count or comma list");
  cmd->add_option("--kar-b", a.kar_bs, "KAR kernel offsets (comma list)");
  cmd->add_option("--channels", a.channels,
                  "comma list of channels or 'all' for no mask");
  cmd->add_option("--reach", a.reach, "reachability: l1 or l2");
  cmd->add_option("--ig-steps", a.params.ig_steps, "IG Riemann steps");
  cmd->add_option("--sg-samples", a.params.sg_samples, "SmoothGrad samples");
  cmd->add_option("--sg-sigma", a.params.sg_sigma,
                  "SmoothGrad noise sigma (<0 = 0.15*(max-min))");
  cmd->add_option("--baseline", a.params.baseline, "perturbation baseline");
}

std::vector<std::string> sweep_args(const SweepArgs& a) {
  std::vector<std::string> out = {
      "--methods=" + a.methods,   "--stages=" + a.stages,
      "--lambdas=" + a.lambdas,   "--channels=" + a.channels,
      "--reach=" + a.reach,
      "--ig-steps=" + std::to_string(a.params.ig_steps),
      "--sg-samples=" + std::to_string(a.params.sg_samples),
      "--sg-sigma=" + CsvWriter::num(a.params.sg_sigma),
      "--baseline=" + CsvWriter::num(a.params.baseline)};
  if (!a.kar_bs.empty()) out.push_back("--kar-b=" + a.kar_bs);
  return out;
}

SweepSpec make_spec(const SweepArgs& a, uint64_t seed, int threads) {
  SweepSpec spec;
  spec.methods = parse_methods(a.methods);
  spec.stages = parse_stages(a.stages);
  spec.lambdas = a.lambdas.empty() ? std::vector<double>{} : parse_range(a.lambdas);
  if (!a.kar_bs.empty()) spec.kar_bs = parse_range(a.kar_bs);
  spec.channels = parse_channels(a.channels);
  spec.reach = parse_reach(a.reach);
  spec.params = a.params;
  spec.params.seed = seed;
  spec.threads = threads;
  return spec;
}

int cmd_agreement(const SampleArgs& sa, const SweepArgs& sw,
                  const std::string& out) {
  ensure_out_dir(out);
  const Checkpoint ck = load_net(sa.checkpoint);
  const Layout layout = Layout::load_file(sa.layout_path);
  std::vector<std::string> args = sample_args(sa, true);
  for (std::string& s : sweep_args(sw)) args.push_back(std::move(s));
  save_manifest(out, "agreement", args);

  const int threads = resolve_threads(sa.threads);
  CollectOptions copts;
  copts.n_matches = sa.matches;
  copts.random_start_steps = sa.random_starts;
  copts.threads = threads;
  std::vector<GridState> states =
      subsample_states(collect_states(ck.net, layout, sa.seed, copts),
                       static_cast<size_t>(sa.max_states));
  const SweepSpec spec = make_spec(sw, sa.seed, threads);
  const std::vector<AgreementRow> rows = lambda_sweep(ck.net, states, spec);
  write_agreement_csv((fs::path(out) / "agreement.csv").string(), rows);
  std::cout << "agreement over " << states.size() << " states, "
            << rows.size() << " rows -> " << out << "\n";
  return 0;
}

int cmd_monitor(const std::vector<std::string>& checkpoints,
                const SampleArgs& sa, const SweepArgs& sw,
                const std::string& out) {
  ensure_out_dir(out);
  const Layout layout = Layout::load_file(sa.layout_path);
  std::vector<std::string> args = sample_args(sa, false);
  std::string joined;
  for (const std::string& c : checkpoints) {
    if (!joined.empty()) joined.push_back(',');
    joined += c;
  }
  args.insert(args.begin(), "--checkpoints=" + joined);
  for (std::string& s : sweep_args(sw)) args.push_back(std::move(s));
  save_manifest(out, "monitor", args);

  const int threads = resolve_threads(sa.threads);
  std::vector<StagedCheckpoint> staged;
  for (const std::string& path : checkpoints) {
    Checkpoint ck = load_checkpoint(path);
    StagedCheckpoint sc;
    auto it = ck.metadata.find("label");
    sc.label = it != ck.metadata.end() && !it->second.empty()
                   ? it->second
                   : fs::path(path).stem().string();
    sc.net = std::move(ck.net);
    staged.push_back(std::move(sc));
  }
  CollectOptions copts;
  copts.n_matches = sa.matches;
  copts.random_start_steps = sa.random_starts;
  copts.threads = threads;
  const SweepSpec spec = make_spec(sw, sa.seed, threads);
  const std::vector<AgreementRow> rows =
      training_monitor(staged, layout, spec, copts, sa.seed,
                       static_cast<size_t>(sa.max_states));
  write_monitor_csv((fs::path(out) / "monitor.csv").string(), rows);
  std::cout << "monitored " << staged.size() << " checkpoints -> " << out
            << "\n";
  return 0;
}

int cmd_counterfactual(const SampleArgs& sa, const std::string& reach_s,
                       double baseline, const std::string& out) {
  ensure_out_dir(out);
  const Checkpoint ck = load_net(sa.checkpoint);
  const Layout layout = Layout::load_file(sa.layout_path);
  std::vector<std::string> args = sample_args(sa, true);
  args.push_back("--reach=" + reach_s);
  args.push_back("--baseline=" + CsvWriter::num(baseline));
  save_manifest(out, "counterfactual", args);

  const int threads = resolve_threads(sa.threads);
  CollectOptions copts;
  copts.n_matches = sa.matches;
  copts.random_start_steps = sa.random_starts;
  copts.threads = threads;
  std::vector<GridState> states =
      subsample_states(collect_states(ck.net, layout, sa.seed, copts),
                       static_cast<size_t>(sa.max_states));
  const std::vector<CounterfactualRow> rows = counterfactual_reachability(
      ck.net, states, parse_reach(reach_s), baseline, threads);
  write_counterfactual_csv((fs::path(out) / "counterfactual.csv").string(),
                           rows);
  std::cout << "counterfactual sweep over " << states.size() << " states -> "
            << out << "\n";
  return 0;
}

int cmd_temporal(const CommonStateArgs& a, const std::string& features_s,
                 double baseline, int horizon, double gamma,
                 const std::string& out) {
  ensure_out_dir(out);
  const Checkpoint ck = load_net(a.checkpoint);
  const Layout layout = Layout::load_file(a.layout_path);
  const GridState s =
      state_at(ck.net, layout, a.seed, a.match, a.step, a.random_starts);

  std::vector<std::string> args = state_selection_args(a);
  args.push_back("--features=" + features_s);
  args.push_back("--baseline=" + CsvWriter::num(baseline));
  args.push_back("--horizon=" + std::to_string(horizon));
  args.push_back("--gamma=" + CsvWriter::num(gamma));
  save_manifest(out, "temporal", args);

  std::vector<int> features;
  if (features_s == "active") {
    for (const std::vector<int>& part : default_partition(s).parts) {
      for (int i : part) features.push_back(i);
    }
  } else {
    for (const std::string& tok : split_list(features_s)) {
      features.push_back(std::stoi(tok));
    }
  }

  GridWorld world(layout);
  const Action truth =
      policy_action(ck.net, s.to_tensor(), legal_actions_from_frame(s));
  const std::vector<double> input = s.to_tensor();
  Partition part = default_partition(s);
  const std::vector<double> oc1 = occlusion_scores(
      ck.net, input, part, QoI{truth, Stage::PreSoftmax}, baseline);

  std::vector<TemporalReport> reports;
  for (int f : features) {
    TemporalReport rep;
    const PairedRollout pr =
        paired_rollout(ck.net, world, s, f, baseline, horizon);
    rep.decomposition = temporal_decomposition(pr, gamma);
    rep.oc1_score = oc1[static_cast<size_t>(f)];
    reports.push_back(std::move(rep));
  }
  write_temporal_csv((fs::path(out) / "temporal.csv").string(), reports);
  std::cout << "temporal decomposition of " << reports.size()
            << " features -> " << out << "\n";
  return 0;
}

int cmd_replay(const std::string& manifest_path, const std::string& out,
               int depth) {
  const RunManifest m = read_manifest(manifest_path);
  if (m.command == "replay") throw UsageError("cannot replay a replay");
  std::vector<std::string> argv;
  argv.push_back(m.command);
  for (const std::string& a : m.args) argv.push_back(a);
  argv.push_back("--out=" + out);
  return dispatch(argv, depth + 1);
}

// ------------------------------------------------------------------ parser

int dispatch(const std::vector<std::string>& argv, int depth) {
  if (depth > 2) throw UsageError("replay nesting too deep");
  CLI::App app{"binary Pac-Man DQN toolkit: training, attribution, "
               "action reconstruction and agreement analysis"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // train ------------------------------------------------------------
  auto* t = app.add_subcommand("train", "train a DQN agent");
  std::string t_layout, t_out;
  TrainConfig t_cfg;
  t->add_option("--layout", t_layout, "maze layout (.lay)")->required();
  t->add_option("--out", t_out, "output directory")->required();
  t->add_option("--total-steps", t_cfg.total_steps, "environment steps");
  t->add_option("--gamma", t_cfg.gamma, "discount factor");
  t->add_option("--learning-rate", t_cfg.learning_rate, "Adam step size");
  t->add_option("--batch-size", t_cfg.batch_size, "replay batch size");
  t->add_option("--replay-capacity", t_cfg.replay_capacity, "replay size");
  t->add_option("--warmup-steps", t_cfg.warmup_steps,
                "steps before updates start");
  t->add_option("--target-sync-period", t_cfg.target_sync_period,
                "steps between target syncs");
  t->add_option("--eps-start", t_cfg.eps_start, "initial exploration");
  t->add_option("--eps-end", t_cfg.eps_end, "final exploration");
  t->add_option("--eps-decay-steps", t_cfg.eps_decay_steps,
                "linear decay horizon (-1 = 10% of total)");
  t->add_option("--max-episode-steps", t_cfg.max_episode_steps,
                "step limit per episode");
  t->add_option("--random-start-steps", t_cfg.random_start_steps,
                "max random moves after reset");
  t->add_option("--eval-every", t_cfg.eval_every, "steps between evals");
  t->add_option("--eval-matches", t_cfg.eval_matches, "matches per eval");
  t->add_option("--final-eval-matches", t_cfg.final_eval_matches,
                "matches for the final eval");
  t->add_option("--stop-at-success", t_cfg.stop_at_success,
                "stop once eval success reaches this (-1 = never)");
  t->add_option("--seed", t_cfg.seed, "training seed");

  // rollout ----------------------------------------------------------
  auto* r = app.add_subcommand("rollout", "play greedy matches, log them");
  CommonStateArgs r_args;
  int r_matches = 1, r_threads = 0;
  std::string r_out;
  r->add_option("--checkpoint", r_args.checkpoint, "network checkpoint")
      ->required();
  r->add_option("--layout", r_args.layout_path, "maze layout")->required();
  r->add_option("--seed", r_args.seed, "rollout seed");
  r->add_option("--matches", r_matches, "number of matches");
  r->add_option("--random-starts", r_args.random_starts,
                "max random moves after reset");
  r->add_option("--threads", r_threads, "worker threads (0 = auto)");
  r->add_option("--out", r_out, "output directory")->required();

  // attribute ----------------------------------------------------------
  auto* at = app.add_subcommand("attribute",
                                "score features of one rollout state");
  CommonStateArgs at_args;
  std::string at_method = "oc1", at_stage = "post", at_action = "auto";
  std::string at_render, at_out;
  MethodParams at_params;
  add_state_selection(at, at_args);
  at->add_option("--method", at_method, "sm|ig|sg|oc1|sarfa");
  at->add_option("--stage", at_stage, "pre|post");
  at->add_option("--action", at_action, "action QoI or 'auto'");
  at->add_option("--ig-steps", at_params.ig_steps, "IG Riemann steps");
  at->add_option("--sg-samples", at_params.sg_samples, "SmoothGrad samples");
  at->add_option("--sg-sigma", at_params.sg_sigma, "SmoothGrad sigma");
  at->add_option("--baseline", at_params.baseline, "perturbation baseline");
  at->add_option("--render", at_render, "ppm,svg");
  at->add_option("--out", at_out, "output directory")->required();

  // reconstruct --------------------------------------------------------
  auto* rc = app.add_subcommand("reconstruct",
                                "reconstruct the action from an explanation");
  CommonStateArgs rc_args;
  std::string rc_method = "oc1", rc_stage = "post", rc_rec = "lar";
  std::string rc_channel = "all", rc_reach = "l1", rc_render, rc_out;
  double rc_lambda = 0.15, rc_kernel_b = 0.0;
  MethodParams rc_params;
  add_state_selection(rc, rc_args);
  rc->add_option("--method", rc_method, "sm|ig|sg|oc1|sarfa");
  rc->add_option("--stage", rc_stage, "pre|post");
  rc->add_option("--reconstructor", rc_rec, "lar|kar");
  rc->add_option("--lambda", rc_lambda, "LAR radius (fraction of max)");
  rc->add_option("--kernel-b", rc_kernel_b, "KAR kernel offset");
  rc->add_option("--channel", rc_channel, "mask to a channel, or 'all'");
  rc->add_option("--reach", rc_reach, "l1|l2");
  rc->add_option("--ig-steps", rc_params.ig_steps, "IG Riemann steps");
  rc->add_option("--sg-samples", rc_params.sg_samples, "SmoothGrad samples");
  rc->add_option("--sg-sigma", rc_params.sg_sigma, "SmoothGrad sigma");
  rc->add_option("--baseline", rc_params.baseline, "perturbation baseline");
  rc->add_option("--render", rc_render, "ppm,svg");
  rc->add_option("--out", rc_out, "output directory")->required();

  // agreement ----------------------------------------------------------
  auto* ag = app.add_subcommand(
      "agreement", "sweep reconstruction agreement over parameters");
  SampleArgs ag_sample;
  SweepArgs ag_sweep;
  std::string ag_out;
  add_sample_args(ag, ag_sample, true);
  add_sweep_args(ag, ag_sweep);
  ag->add_option("--out", ag_out, "output directory")->required();

  // monitor ------------------------------------------------------------
  auto* mo = app.add_subcommand(
      "monitor", "agreement across training-stage checkpoints");
  SampleArgs mo_sample;
  SweepArgs mo_sweep;
  std::string mo_ckpts, mo_out;
  mo->add_option("--checkpoints", mo_ckpts, "comma list of .rlxq files")
      ->required();
  add_sample_args(mo, mo_sample, false);
  add_sweep_args(mo, mo_sweep);
  mo->add_option("--out", mo_out, "output directory")->required();

  // counterfactual -------------------------------------------------------
  auto* cf = app.add_subcommand(
      "counterfactual", "action change rate vs feature reachability");
  SampleArgs cf_sample;
  std::string cf_reach = "l1", cf_out;
  double cf_baseline = 0.0;
  add_sample_args(cf, cf_sample, true);
  cf->add_option("--reach", cf_reach, "l1|l2");
  cf->add_option("--baseline", cf_baseline, "perturbation baseline");
  cf->add_option("--out", cf_out, "output directory")->required();

  // temporal -------------------------------------------------------------
  auto* tp = app.add_subcommand(
      "temporal", "paired-rollout temporal attribution decomposition");
  CommonStateArgs tp_args;
  std::string tp_features = "active", tp_out;
  double tp_baseline = 0.0, tp_gamma = 0.95;
  int tp_horizon = 100;
  add_state_selection(tp, tp_args);
  tp->add_option("--features", tp_features,
                 "comma list of feature indices, or 'active'");
  tp->add_option("--baseline", tp_baseline, "perturbation baseline");
  tp->add_option("--horizon", tp_horizon, "max rollout length");
  tp->add_option("--gamma", tp_gamma, "discount factor");
  tp->add_option("--out", tp_out, "output directory")->required();

  // replay -----------------------------------------------------------------
  auto* rp = app.add_subcommand("replay",
                                "re-run a recorded command from its manifest");
  std::string rp_manifest, rp_out;
  rp->add_option("--manifest", rp_manifest, "run_manifest.txt path")
      ->required();
  rp->add_option("--out", rp_out, "new output directory")->required();

  std::vector<const char*> cargv;
  cargv.push_back("rlx");
  for (const std::string& a : argv) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    // --help / --version exit 0 through here; real parse errors become
    // usage failures.
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (*t) return cmd_train(t_layout, t_cfg, t_out);
  if (*r) return cmd_rollout(r_args, r_matches, r_out, resolve_threads(r_threads));
  if (*at) {
    return cmd_attribute(at_args, at_method, at_stage, at_action, at_params,
                         at_render, at_out);
  }
  if (*rc) {
    return cmd_reconstruct(rc_args, rc_method, rc_stage, rc_rec, rc_lambda,
                           rc_kernel_b, rc_channel, rc_reach, rc_params,
                           rc_render, rc_out);
  }
  if (*ag) return cmd_agreement(ag_sample, ag_sweep, ag_out);
  if (*mo) return cmd_monitor(split_list(mo_ckpts), mo_sample, mo_sweep, mo_out);
  if (*cf) return cmd_counterfactual(cf_sample, cf_reach, cf_baseline, cf_out);
  if (*tp) {
    return cmd_temporal(tp_args, tp_features, tp_baseline, tp_horizon,
                        tp_gamma, tp_out);
  }
  if (*rp) return cmd_replay(rp_manifest, rp_out, depth);
  throw UsageError("no subcommand given");
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  try {
    return dispatch(args, 0);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
