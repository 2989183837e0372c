#pragma once

#include <vector>

#include "rlx/layout.hpp"
#include "rlx/types.hpp"

namespace rlx {

enum class Terminal : uint8_t { None = 0, Win = 1, Lose = 2 };

struct GhostState {
  Coord pos;
  Coord spawn;          // respawn target after being eaten
  int scared_timer = 0; // steps of scared state remaining (0 = chasing)
};

// Full environment state. The two binary frames (current and previous) are
// the agent-visible observation and the source of truth for food / capsule
// dynamics; agent and ghost motion is driven by the structured fields and
// re-rendered into the frame channels after every step.
struct GridState {
  int width = 0;
  int height = 0;
  // frames[0] = current step, frames[1] = previous step.
  // Each frame holds kChannelsPerFrame * height * width bits, channel-major:
  // index (c*height + y)*width + x.
  std::array<std::vector<uint8_t>, kFrameCount> frames;
  Coord agent_pos;
  std::vector<GhostState> ghosts;
  double score = 0.0;
  int step_count = 0;
  Terminal terminal = Terminal::None;

  int frame_size() const { return kChannelsPerFrame * height * width; }
  int feature_count() const { return kStateChannels * height * width; }

  uint8_t frame_bit(int frame, Channel c, int x, int y) const {
    return frames[static_cast<size_t>(frame)]
                 [(static_cast<int>(c) * height + y) * width + x];
  }

  // Flattened feature index into the stacked 12-channel tensor; channels
  // 0..5 are the current frame, 6..11 the previous frame.
  int feature_index(int stacked_channel, int x, int y) const {
    return (stacked_channel * height + y) * width + x;
  }
  // Inverse of feature_index.
  void feature_coords(int index, int* stacked_channel, int* x, int* y) const;

  // Writes the stacked frames as doubles (values 0.0 / 1.0) into out, which
  // must have feature_count() elements.
  void to_tensor(double* out) const;
  std::vector<double> to_tensor() const;

  int food_remaining() const;
};

struct Transition {
  GridState state;       // state before the action
  Action action;
  double reward = 0.0;
  GridState next_state;  // state after the action
  bool done = false;
};

// Reward and rule constants. Values are fixed by the game design; they are
// grouped here so tests can reference them by name.
namespace rules {
inline constexpr double kStepPenalty = -1.0;
inline constexpr double kFoodReward = 10.0;
inline constexpr double kCapsuleReward = 25.0;
inline constexpr double kEatGhostReward = 200.0;
inline constexpr double kWinReward = 500.0;
inline constexpr double kLoseReward = -500.0;
inline constexpr int kScaredDuration = 40;
inline constexpr int kDefaultMaxSteps = 1000;
}  // namespace rules

class GridWorld {
 public:
  GridWorld(Layout layout, int max_steps = rules::kDefaultMaxSteps);

  // Fresh match state: full food/capsules, entities at spawn, both frames
  // identical, score 0, step_count 0.
  GridState reset() const;

  // Applies one action with the fixed rule order (move agent with wall
  // no-op, consume, move ghosts, resolve contacts, check win/lose, shift
  // frames). Throws SteppedTerminalError if state.terminal != None.
  Transition step(const GridState& state, Action action) const;

  // Replaces the current state with an arbitrary (possibly counterfactually
  // perturbed) state and reconciles the structured fields with the frame
  // bits of the current frame: food/capsules are read from their channels,
  // ghosts listed in `state.ghosts` survive only where a matching ghost /
  // scared-ghost bit is set and extra bits spawn new ghosts, and the agent
  // position follows the agent channel when it contains exactly one bit.
  // Throws ShapeMismatchError if dimensions disagree with the layout.
  GridState set_state(const GridState& state) const;

  // Actions that do not run into a wall from `pos`. Never empty on maps
  // whose open cells have at least one open neighbour.
  std::vector<Action> legal_actions(const GridState& state) const;
  std::vector<Action> legal_actions_at(Coord pos) const;

  const Layout& layout() const { return layout_; }
  int max_steps() const { return max_steps_; }

 private:
  void render_entities(GridState& s) const;

  Layout layout_;
  int max_steps_;
};

// Legal actions computed from a state's own wall channel, for callers that
// hold a state without its GridWorld.
std::vector<Action> legal_actions_from_frame(const GridState& state);

}  // namespace rlx
