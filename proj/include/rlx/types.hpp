#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace rlx {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------- geometry

struct Coord {
  int x = 0;  // column, 0 at the left edge
  int y = 0;  // row, 0 at the top edge
  bool operator==(const Coord&) const = default;
};

inline int l1_distance(Coord a, Coord b) {
  int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx + dy;
}

double l2_distance(Coord a, Coord b);

// ----------------------------------------------------------------- actions

enum class Action : int { North = 0, South = 1, East = 2, West = 3 };

inline constexpr int kNumActions = 4;

// Displacement of each action in (x, y); y grows downwards.
inline constexpr std::array<Coord, kNumActions> kActionDelta{
    {{0, -1}, {0, 1}, {1, 0}, {-1, 0}}};

const char* action_name(Action a);

// Parses "north"/"south"/"east"/"west" (case-insensitive). Returns false on
// unknown names.
bool action_from_name(const std::string& name, Action* out);

// ---------------------------------------------------------------- channels

// Binary feature planes of a single observation frame, in storage order.
enum class Channel : int {
  Wall = 0,
  Food = 1,
  Capsule = 2,
  Ghost = 3,
  ScaredGhost = 4,
  Agent = 5,
};

inline constexpr int kChannelsPerFrame = 6;
inline constexpr int kFrameCount = 2;      // current frame + previous frame
inline constexpr int kStateChannels = kChannelsPerFrame * kFrameCount;

const char* channel_name(Channel c);
bool channel_from_name(const std::string& name, Channel* out);

}  // namespace rlx
