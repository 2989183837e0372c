// Hand-simulated episodes pinning down the reward values and the exact
// phase order of GridWorld::step.
#include <doctest.h>

#include "rlx/error.hpp"
#include "rlx/gridworld.hpp"
#include "rlx/layout.hpp"

using namespace rlx;

namespace {

GridWorld make_env(const std::string& text, int max_steps = 1000) {
  return GridWorld(Layout::parse(text), max_steps);
}

uint8_t& bit(GridState& s, Channel c, int x, int y) {
  return s.frames[0][(static_cast<int>(c) * s.height + y) * s.width + x];
}

}  // namespace

TEST_CASE("reset produces full board with both frames identical") {
  GridWorld env = make_env(
      "%%%%%%\n"
      "%Po.G%\n"
      "%%%%%%\n");
  GridState s = env.reset();
  CHECK(s.width == 6);
  CHECK(s.height == 3);
  CHECK(s.agent_pos.x == 1);
  CHECK(s.agent_pos.y == 1);
  REQUIRE(s.ghosts.size() == 1);
  CHECK(s.ghosts[0].pos.x == 4);
  CHECK(s.ghosts[0].spawn.x == 4);
  CHECK(s.ghosts[0].scared_timer == 0);
  CHECK(s.food_remaining() == 1);
  CHECK(s.frame_bit(0, Channel::Capsule, 2, 1) == 1);
  CHECK(s.frame_bit(0, Channel::Food, 3, 1) == 1);
  CHECK(s.frame_bit(0, Channel::Ghost, 4, 1) == 1);
  CHECK(s.frame_bit(0, Channel::ScaredGhost, 4, 1) == 0);
  CHECK(s.frame_bit(0, Channel::Agent, 1, 1) == 1);
  CHECK(s.frame_bit(0, Channel::Wall, 0, 0) == 1);
  CHECK(s.frames[0] == s.frames[1]);
  CHECK(s.score == 0.0);
  CHECK(s.step_count == 0);
  CHECK(s.terminal == Terminal::None);
}

TEST_CASE("plain move costs the step penalty; wall bump is a no-op") {
  GridWorld env = make_env(
      "%%%%%\n"
      "%P..%\n"
      "%%%%%\n");
  GridState s = env.reset();
  Transition tr = env.step(s, Action::North);  // wall above
  CHECK(tr.reward == doctest::Approx(-1.0));
  CHECK(tr.next_state.agent_pos.x == 1);
  CHECK(tr.next_state.agent_pos.y == 1);
  CHECK_FALSE(tr.done);
  CHECK(tr.next_state.step_count == 1);
  CHECK(tr.next_state.score == doctest::Approx(-1.0));
}

TEST_CASE("eating food pays +10 on top of the step penalty") {
  GridWorld env = make_env(
      "%%%%%\n"
      "%P..%\n"
      "%%%%%\n");
  GridState s = env.reset();
  Transition tr = env.step(s, Action::East);
  CHECK(tr.reward == doctest::Approx(9.0));
  CHECK(tr.next_state.food_remaining() == 1);
  CHECK(tr.next_state.frame_bit(0, Channel::Food, 2, 1) == 0);
  CHECK_FALSE(tr.done);
}

TEST_CASE("clearing the last food wins immediately with +500") {
  GridWorld env = make_env(
      "%%%%%\n"
      "%P..%\n"
      "%%%%%\n");
  GridState s = env.reset();
  s = env.step(s, Action::East).next_state;
  Transition tr = env.step(s, Action::East);
  CHECK(tr.reward == doctest::Approx(-1.0 + 10.0 + 500.0));
  CHECK(tr.done);
  CHECK(tr.next_state.terminal == Terminal::Win);
  CHECK(tr.next_state.food_remaining() == 0);
  CHECK(tr.next_state.score == doctest::Approx(9.0 + 509.0));
}

TEST_CASE("capsule scares every ghost for the full duration") {
  GridWorld env = make_env(
      "%%%%%%\n"
      "%Po.G%\n"
      "%%%%%%\n");
  GridState s = env.reset();
  Transition tr = env.step(s, Action::East);
  CHECK(tr.reward == doctest::Approx(-1.0 + 25.0));
  REQUIRE(tr.next_state.ghosts.size() == 1);
  // Ghost flees but its only legal move is West; timer ticks after moving.
  CHECK(tr.next_state.ghosts[0].pos.x == 3);
  CHECK(tr.next_state.ghosts[0].scared_timer == rules::kScaredDuration - 1);
  CHECK(tr.next_state.frame_bit(0, Channel::ScaredGhost, 3, 1) == 1);
  CHECK(tr.next_state.frame_bit(0, Channel::Ghost, 3, 1) == 0);
  CHECK(tr.next_state.frame_bit(0, Channel::Capsule, 2, 1) == 0);
  // Ghosts do not eat food off the board.
  CHECK(tr.next_state.frame_bit(0, Channel::Food, 3, 1) == 1);
  CHECK_FALSE(tr.done);
}

TEST_CASE("walking onto a scared ghost eats it and can win in the same step") {
  GridWorld env = make_env(
      "%%%%%%\n"
      "%Po.G%\n"
      "%%%%%%\n");
  GridState s = env.reset();
  s = env.step(s, Action::East).next_state;  // capsule; ghost now at (3,1)
  Transition tr = env.step(s, Action::East);
  // Food +10, eat scared ghost +200, last food gone so win +500.
  CHECK(tr.reward == doctest::Approx(-1.0 + 10.0 + 200.0 + 500.0));
  CHECK(tr.done);
  CHECK(tr.next_state.terminal == Terminal::Win);
  REQUIRE(tr.next_state.ghosts.size() == 1);
  CHECK(tr.next_state.ghosts[0].pos.x == 4);  // respawned
  CHECK(tr.next_state.ghosts[0].scared_timer == 0);
}

TEST_CASE("walking into an unscared ghost loses even if it clears the food") {
  GridWorld env = make_env(
      "%%%%%%\n"
      "%P..G%\n"
      "%%%%%%\n");
  GridState s = env.reset();
  Transition tr = env.step(s, Action::East);
  CHECK(tr.reward == doctest::Approx(9.0));
  CHECK(tr.next_state.ghosts[0].pos.x == 3);  // chased one cell West
  s = tr.next_state;
  tr = env.step(s, Action::East);
  CHECK(tr.reward == doctest::Approx(-1.0 + 10.0 - 500.0));
  CHECK(tr.done);
  CHECK(tr.next_state.terminal == Terminal::Lose);
}

TEST_CASE("a chasing ghost that reaches the agent ends the match") {
  GridWorld env = make_env(
      "%%%%%%%\n"
      "%P. G.%\n"
      "%%%%%%%\n");
  GridState s = env.reset();
  Transition tr = env.step(s, Action::North);
  CHECK(tr.reward == doctest::Approx(-1.0));
  CHECK(tr.next_state.ghosts[0].pos.x == 3);
  tr = env.step(tr.next_state, Action::North);
  CHECK(tr.next_state.ghosts[0].pos.x == 2);
  CHECK(tr.next_state.frames[1] == tr.state.frames[0]);  // frame shift
  tr = env.step(tr.next_state, Action::North);
  CHECK(tr.reward == doctest::Approx(-501.0));
  CHECK(tr.done);
  CHECK(tr.next_state.terminal == Terminal::Lose);
  CHECK(tr.next_state.ghosts[0].pos.x == tr.next_state.agent_pos.x);
  CHECK(tr.next_state.ghosts[0].pos.y == tr.next_state.agent_pos.y);
}

TEST_CASE("ghost chase ties resolve to the lowest action index") {
  GridWorld env = make_env(
      "%%%%%\n"
      "%...%\n"
      "%.P.%\n"
      "%..G%\n"
      "%%%%%\n");
  GridState s = env.reset();
  Transition tr = env.step(s, Action::North);
  // From (3,3) both North (3,2) and West (2,3) are distance 2 from the
  // agent's new cell (2,1); North has the lower action index.
  CHECK(tr.next_state.ghosts[0].pos.x == 3);
  CHECK(tr.next_state.ghosts[0].pos.y == 2);
}

TEST_CASE("scared ghost forced onto the agent is eaten, not lethal") {
  GridWorld env = make_env(
      "%%%%%\n"
      "%P..%\n"
      "%%G%%\n"
      "%%%%%\n");
  GridState s = env.reset();
  // Mark the ghost scared with one tick left; frames must agree with the
  // structured ghost list for set_state to keep the timer.
  s.ghosts[0].scared_timer = 1;
  bit(s, Channel::Ghost, 2, 2) = 0;
  bit(s, Channel::ScaredGhost, 2, 2) = 1;
  GridState t = env.set_state(s);
  REQUIRE(t.ghosts.size() == 1);
  CHECK(t.ghosts[0].scared_timer == 1);

  // Agent steps East onto food; the ghost's only exit is the agent's cell.
  // The timer must still read 1 when contact resolves, so the ghost is
  // eaten rather than the match lost.
  Transition tr = env.step(t, Action::East);
  CHECK(tr.reward == doctest::Approx(-1.0 + 10.0 + 200.0));
  CHECK_FALSE(tr.done);
  CHECK(tr.next_state.ghosts[0].pos.x == 2);
  CHECK(tr.next_state.ghosts[0].pos.y == 2);  // back at spawn
  CHECK(tr.next_state.ghosts[0].scared_timer == 0);
}

TEST_CASE("running out of steps counts as a loss") {
  GridWorld env = make_env(
      "%%%%%\n"
      "%P..%\n"
      "%%%%%\n",
      /*max_steps=*/3);
  GridState s = env.reset();
  Transition tr = env.step(s, Action::North);
  CHECK(tr.reward == doctest::Approx(-1.0));
  tr = env.step(tr.next_state, Action::North);
  CHECK(tr.reward == doctest::Approx(-1.0));
  tr = env.step(tr.next_state, Action::North);
  CHECK(tr.reward == doctest::Approx(-501.0));
  CHECK(tr.done);
  CHECK(tr.next_state.terminal == Terminal::Lose);
}

TEST_CASE("stepping a terminal state throws") {
  GridWorld env = make_env(
      "%%%%%\n"
      "%P.%%\n"
      "%%%%%\n");
  GridState s = env.reset();
  Transition tr = env.step(s, Action::East);  // last food -> win
  CHECK(tr.next_state.terminal == Terminal::Win);
  CHECK_THROWS_AS(env.step(tr.next_state, Action::East), SteppedTerminalError);
}

TEST_CASE("legal actions reflect the walls around the agent") {
  GridWorld env = make_env(
      "%%%%%\n"
      "%P..%\n"
      "%%%%%\n");
  GridState s = env.reset();
  std::vector<Action> acts = env.legal_actions(s);
  REQUIRE(acts.size() == 1);
  CHECK(acts[0] == Action::East);
  CHECK(legal_actions_from_frame(s) == acts);

  GridWorld cross = make_env(
      "%%%%%\n"
      "%...%\n"
      "%.P.%\n"
      "%...%\n"
      "%%%%%\n");
  GridState c = cross.reset();
  CHECK(cross.legal_actions(c).size() == 4);
  CHECK(legal_actions_from_frame(c) == cross.legal_actions(c));
}

TEST_CASE("frame shift keeps the previous observation") {
  GridWorld env = make_env(
      "%%%%%\n"
      "%P..%\n"
      "%%%%%\n");
  GridState s = env.reset();
  Transition tr = env.step(s, Action::East);
  CHECK(tr.next_state.frames[1] == s.frames[0]);
  Transition tr2 = env.step(tr.next_state, Action::West);
  CHECK(tr2.next_state.frames[1] == tr.next_state.frames[0]);
}

TEST_CASE("set_state is the identity on a reset state") {
  GridWorld env = make_env(
      "%%%%%%\n"
      "%Po.G%\n"
      "%%%%%%\n");
  GridState s = env.reset();
  s.score = -4.0;
  s.step_count = 4;
  GridState t = env.set_state(s);
  CHECK(t.frames[0] == s.frames[0]);
  CHECK(t.frames[1] == s.frames[1]);
  CHECK(t.agent_pos.x == s.agent_pos.x);
  CHECK(t.agent_pos.y == s.agent_pos.y);
  REQUIRE(t.ghosts.size() == s.ghosts.size());
  CHECK(t.ghosts[0].scared_timer == s.ghosts[0].scared_timer);
  CHECK(t.score == s.score);
  CHECK(t.step_count == s.step_count);
}

TEST_CASE("set_state honors edited food bits in later dynamics") {
  GridWorld env = make_env(
      "%%%%%\n"
      "%P..%\n"
      "%%%%%\n");
  GridState s = env.reset();
  bit(s, Channel::Food, 2, 1) = 0;
  GridState t = env.set_state(s);
  CHECK(t.food_remaining() == 1);
  Transition tr = env.step(t, Action::East);
  CHECK(tr.reward == doctest::Approx(-1.0));  // nothing left to eat here
  CHECK_FALSE(tr.done);
}

TEST_CASE("set_state moves the agent when its channel bit moved") {
  GridWorld env = make_env(
      "%%%%%\n"
      "%P..%\n"
      "%%%%%\n");
  GridState s = env.reset();
  bit(s, Channel::Agent, 1, 1) = 0;
  bit(s, Channel::Agent, 3, 1) = 1;
  GridState t = env.set_state(s);
  CHECK(t.agent_pos.x == 3);
  CHECK(t.agent_pos.y == 1);
}

TEST_CASE("set_state keeps the structured agent when the channel is ambiguous") {
  GridWorld env = make_env(
      "%%%%%\n"
      "%P..%\n"
      "%%%%%\n");
  GridState s = env.reset();
  bit(s, Channel::Agent, 3, 1) = 1;  // two agent bits now
  GridState t = env.set_state(s);
  CHECK(t.agent_pos.x == 1);
  CHECK(t.agent_pos.y == 1);
}

TEST_CASE("set_state spawns a ghost for an unclaimed ghost bit") {
  GridWorld env = make_env(
      "%%%%%%\n"
      "%Po.G%\n"
      "%%%%%%\n");
  GridState s = env.reset();
  bit(s, Channel::Ghost, 2, 1) = 1;
  GridState t = env.set_state(s);
  REQUIRE(t.ghosts.size() == 2);
  // New ghost spawns in place with no scare timer.
  CHECK(t.ghosts[1].pos.x == 2);
  CHECK(t.ghosts[1].spawn.x == 2);
  CHECK(t.ghosts[1].scared_timer == 0);

  // An unclaimed scared bit spawns a ghost with a fresh timer.
  GridState u = env.reset();
  bit(u, Channel::ScaredGhost, 2, 1) = 1;
  GridState v = env.set_state(u);
  REQUIRE(v.ghosts.size() == 2);
  CHECK(v.ghosts[1].scared_timer == rules::kScaredDuration);
}

TEST_CASE("set_state drops a listed ghost whose bit was erased") {
  GridWorld env = make_env(
      "%%%%%%\n"
      "%Po.G%\n"
      "%%%%%%\n");
  GridState s = env.reset();
  bit(s, Channel::Ghost, 4, 1) = 0;
  GridState t = env.set_state(s);
  CHECK(t.ghosts.empty());
}

TEST_CASE("set_state rejects states with the wrong shape") {
  GridWorld env = make_env(
      "%%%%%\n"
      "%P..%\n"
      "%%%%%\n");
  GridState s = env.reset();
  s.width = 7;
  CHECK_THROWS_AS(env.set_state(s), ShapeMismatchError);
}

TEST_CASE("to_tensor stacks current then previous frame as doubles") {
  GridWorld env = make_env(
      "%%%%%\n"
      "%P..%\n"
      "%%%%%\n");
  GridState s = env.step(env.reset(), Action::East).next_state;
  std::vector<double> t = s.to_tensor();
  REQUIRE(t.size() == static_cast<size_t>(s.feature_count()));
  const int fs = s.frame_size();
  for (int i = 0; i < fs; ++i) {
    CHECK(t[static_cast<size_t>(i)] == static_cast<double>(s.frames[0][i]));
    CHECK(t[static_cast<size_t>(fs + i)] ==
          static_cast<double>(s.frames[1][i]));
  }
}

TEST_CASE("feature_index and feature_coords are inverses") {
  GridWorld env = make_env(
      "%%%%%\n"
      "%P..%\n"
      "%%%%%\n");
  GridState s = env.reset();
  for (int c = 0; c < 2 * kChannelsPerFrame; ++c) {
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        int idx = s.feature_index(c, x, y);
        int cc, xx, yy;
        s.feature_coords(idx, &cc, &xx, &yy);
        CHECK(cc == c);
        CHECK(xx == x);
        CHECK(yy == y);
      }
    }
  }
}
