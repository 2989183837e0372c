#include "rlx/gridworld.hpp"

#include <algorithm>

#include "rlx/error.hpp"

namespace rlx {
namespace {

int channel_offset(Channel c, int height, int width) {
  return static_cast<int>(c) * height * width;
}

}  // namespace

void GridState::feature_coords(int index, int* stacked_channel, int* x,
                               int* y) const {
  *x = index % width;
  int rest = index / width;
  *y = rest % height;
  *stacked_channel = rest / height;
}

void GridState::to_tensor(double* out) const {
  const int fs = frame_size();
  for (int f = 0; f < kFrameCount; ++f) {
    const std::vector<uint8_t>& frame = frames[static_cast<size_t>(f)];
    for (int i = 0; i < fs; ++i) {
      out[f * fs + i] = static_cast<double>(frame[static_cast<size_t>(i)]);
    }
  }
}

std::vector<double> GridState::to_tensor() const {
  std::vector<double> out(static_cast<size_t>(feature_count()));
  to_tensor(out.data());
  return out;
}

int GridState::food_remaining() const {
  const int off = channel_offset(Channel::Food, height, width);
  int n = 0;
  for (int i = 0; i < height * width; ++i) n += frames[0][off + i];
  return n;
}

GridWorld::GridWorld(Layout layout, int max_steps)
    : layout_(std::move(layout)), max_steps_(max_steps) {}

void GridWorld::render_entities(GridState& s) const {
  const int hw = s.height * s.width;
  std::vector<uint8_t>& f = s.frames[0];
  std::fill_n(f.begin() + channel_offset(Channel::Wall, s.height, s.width),
              hw, uint8_t{0});
  std::fill_n(f.begin() + channel_offset(Channel::Ghost, s.height, s.width),
              hw, uint8_t{0});
  std::fill_n(
      f.begin() + channel_offset(Channel::ScaredGhost, s.height, s.width), hw,
      uint8_t{0});
  std::fill_n(f.begin() + channel_offset(Channel::Agent, s.height, s.width),
              hw, uint8_t{0});
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      if (layout_.is_wall(x, y)) {
        f[channel_offset(Channel::Wall, s.height, s.width) + y * s.width + x] =
            1;
      }
    }
  }
  for (const GhostState& g : s.ghosts) {
    Channel c = g.scared_timer > 0 ? Channel::ScaredGhost : Channel::Ghost;
    f[channel_offset(c, s.height, s.width) + g.pos.y * s.width + g.pos.x] = 1;
  }
  f[channel_offset(Channel::Agent, s.height, s.width) +
    s.agent_pos.y * s.width + s.agent_pos.x] = 1;
}

GridState GridWorld::reset() const {
  GridState s;
  s.width = layout_.width;
  s.height = layout_.height;
  s.frames[0].assign(static_cast<size_t>(s.frame_size()), 0);
  const int hw = s.height * s.width;
  for (int i = 0; i < hw; ++i) {
    CellType c = layout_.cells[static_cast<size_t>(i)];
    if (c == CellType::Food) {
      s.frames[0][channel_offset(Channel::Food, s.height, s.width) + i] = 1;
    } else if (c == CellType::Capsule) {
      s.frames[0][channel_offset(Channel::Capsule, s.height, s.width) + i] = 1;
    }
  }
  s.agent_pos = layout_.agent_spawn;
  for (Coord g : layout_.ghost_spawns) s.ghosts.push_back({g, g, 0});
  render_entities(s);
  s.frames[1] = s.frames[0];
  return s;
}

std::vector<Action> GridWorld::legal_actions_at(Coord pos) const {
  std::vector<Action> out;
  for (int a = 0; a < kNumActions; ++a) {
    Coord d = kActionDelta[static_cast<size_t>(a)];
    int nx = pos.x + d.x;
    int ny = pos.y + d.y;
    if (layout_.in_bounds(nx, ny) && !layout_.is_wall(nx, ny)) {
      out.push_back(static_cast<Action>(a));
    }
  }
  return out;
}

std::vector<Action> GridWorld::legal_actions(const GridState& state) const {
  return legal_actions_at(state.agent_pos);
}

std::vector<Action> legal_actions_from_frame(const GridState& state) {
  std::vector<Action> out;
  const int hw = state.height * state.width;
  const int wall_off = static_cast<int>(Channel::Wall) * hw;
  for (int a = 0; a < kNumActions; ++a) {
    const Coord d = kActionDelta[static_cast<size_t>(a)];
    const int nx = state.agent_pos.x + d.x;
    const int ny = state.agent_pos.y + d.y;
    if (nx < 0 || nx >= state.width || ny < 0 || ny >= state.height) continue;
    if (!state.frames[0][static_cast<size_t>(wall_off + ny * state.width + nx)]) {
      out.push_back(static_cast<Action>(a));
    }
  }
  return out;
}

GridState GridWorld::set_state(const GridState& state) const {
  if (state.width != layout_.width || state.height != layout_.height ||
      state.frames[0].size() != static_cast<size_t>(state.frame_size()) ||
      state.frames[1].size() != static_cast<size_t>(state.frame_size())) {
    throw ShapeMismatchError("set_state: state shape does not match layout");
  }
  GridState s = state;
  const int h = s.height, w = s.width;
  const std::vector<uint8_t>& f = s.frames[0];

  // Agent: follow the agent channel when it is unambiguous.
  int agent_bits = 0;
  Coord agent_from_bits;
  const int agent_off = channel_offset(Channel::Agent, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (f[agent_off + y * w + x]) {
        ++agent_bits;
        agent_from_bits = {x, y};
      }
    }
  }
  if (agent_bits == 1) s.agent_pos = agent_from_bits;

  // Ghosts: keep listed ghosts whose bit is still present, spawn ghosts for
  // bits that no listed ghost accounts for.
  const int ghost_off = channel_offset(Channel::Ghost, h, w);
  const int scared_off = channel_offset(Channel::ScaredGhost, h, w);
  std::vector<GhostState> ghosts;
  std::vector<uint8_t> claimed(static_cast<size_t>(2 * h * w), 0);
  for (const GhostState& g : s.ghosts) {
    int cell = g.pos.y * w + g.pos.x;
    bool scared = g.scared_timer > 0;
    if (f[(scared ? scared_off : ghost_off) + cell]) {
      ghosts.push_back(g);
      claimed[static_cast<size_t>((scared ? h * w : 0) + cell)] = 1;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int cell = y * w + x;
      if (f[ghost_off + cell] && !claimed[static_cast<size_t>(cell)]) {
        ghosts.push_back({{x, y}, {x, y}, 0});
      }
      if (f[scared_off + cell] && !claimed[static_cast<size_t>(h * w + cell)]) {
        ghosts.push_back({{x, y}, {x, y}, rules::kScaredDuration});
      }
    }
  }
  s.ghosts = std::move(ghosts);
  return s;
}

Transition GridWorld::step(const GridState& state, Action action) const {
  if (state.terminal != Terminal::None) {
    throw SteppedTerminalError("step: episode already terminal");
  }
  Transition tr;
  tr.state = state;
  tr.action = action;

  GridState s = state;
  const int h = s.height, w = s.width;
  double reward = rules::kStepPenalty;
  s.step_count += 1;

  // Phase 1: agent moves; running into a wall is a no-op.
  Coord d = kActionDelta[static_cast<size_t>(action)];
  Coord dest{s.agent_pos.x + d.x, s.agent_pos.y + d.y};
  if (layout_.in_bounds(dest.x, dest.y) && !layout_.is_wall(dest.x, dest.y)) {
    s.agent_pos = dest;
  }

  // Phase 2: consume food / capsule on the agent's cell.
  const int cell = s.agent_pos.y * w + s.agent_pos.x;
  const int food_off = channel_offset(Channel::Food, h, w);
  const int capsule_off = channel_offset(Channel::Capsule, h, w);
  if (s.frames[0][food_off + cell]) {
    s.frames[0][food_off + cell] = 0;
    reward += rules::kFoodReward;
  } else if (s.frames[0][capsule_off + cell]) {
    s.frames[0][capsule_off + cell] = 0;
    reward += rules::kCapsuleReward;
    for (GhostState& g : s.ghosts) g.scared_timer = rules::kScaredDuration;
  }

  // Phase 3: contact on the agent's cell (agent walked into a ghost).
  for (GhostState& g : s.ghosts) {
    if (s.terminal != Terminal::None) break;
    if (g.pos == s.agent_pos) {
      if (g.scared_timer > 0) {
        reward += rules::kEatGhostReward;
        g.pos = g.spawn;
        g.scared_timer = 0;
      } else {
        reward += rules::kLoseReward;
        s.terminal = Terminal::Lose;
      }
    }
  }

  // Phase 4: all food eaten wins immediately; ghosts do not move.
  if (s.terminal == Terminal::None && s.food_remaining() == 0) {
    reward += rules::kWinReward;
    s.terminal = Terminal::Win;
  }

  // Phase 5: ghosts chase (or flee while scared) with deterministic
  // L1-greedy moves; ties broken by the lowest action index.
  if (s.terminal == Terminal::None) {
    for (GhostState& g : s.ghosts) {
      std::vector<Action> moves = legal_actions_at(g.pos);
      if (!moves.empty()) {
        bool flee = g.scared_timer > 0;
        Coord best = g.pos;
        int best_dist = flee ? -1 : 1 << 30;
        for (Action m : moves) {
          Coord md = kActionDelta[static_cast<size_t>(m)];
          Coord np{g.pos.x + md.x, g.pos.y + md.y};
          int dist = l1_distance(np, s.agent_pos);
          if (flee ? dist > best_dist : dist < best_dist) {
            best_dist = dist;
            best = np;
          }
        }
        g.pos = best;
      }
      if (g.pos == s.agent_pos) {
        if (g.scared_timer > 0) {
          reward += rules::kEatGhostReward;
          g.pos = g.spawn;
          g.scared_timer = 0;
        } else {
          reward += rules::kLoseReward;
          s.terminal = Terminal::Lose;
          break;
        }
      }
      if (g.scared_timer > 0) g.scared_timer -= 1;
    }
  }

  // Phase 6: reaching the step limit without winning counts as a loss.
  if (s.terminal == Terminal::None && s.step_count >= max_steps_) {
    reward += rules::kLoseReward;
    s.terminal = Terminal::Lose;
  }

  // Phase 7: shift frames and render the new current frame.
  s.frames[1] = state.frames[0];
  render_entities(s);
  s.score += reward;

  tr.reward = reward;
  tr.next_state = std::move(s);
  tr.done = tr.next_state.terminal != Terminal::None;
  return tr;
}

}  // namespace rlx
