#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rlx/gridworld.hpp"

namespace rlx {

// Text log of environment transitions. Line 1 is a header with the grid
// dimensions; every following line is one transition:
//
//   <state-rle> <action-id> <reward> <done>
//
// where <state-rle> encodes the stacked binary state tensor channel by
// channel (channels joined with ';', runs written as <count>x<bit> and
// joined with ','). The encoding round-trips bit-exactly.

std::string rle_encode_state(const GridState& s);

// Fills frames/width/height of *out (structured fields are left default;
// use GridWorld::set_state to reconcile them). Throws ParseError on
// malformed input or when the run lengths do not cover the grid.
void rle_decode_state(const std::string& text, int width, int height,
                      GridState* out);

struct TrajectoryRecord {
  GridState state;
  Action action = Action::North;
  double reward = 0.0;
  bool done = false;
};

void write_trajectory(std::ostream& out, int width, int height,
                      const std::vector<TrajectoryRecord>& records);

// Throws ParseError / IoError on malformed input.
std::vector<TrajectoryRecord> read_trajectory(std::istream& in, int* width,
                                              int* height);

}  // namespace rlx
