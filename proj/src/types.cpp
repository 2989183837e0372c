#include "rlx/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace rlx {
namespace {

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

double l2_distance(Coord a, Coord b) {
  double dx = a.x - b.x;
  double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

const char* action_name(Action a) {
  switch (a) {
    case Action::North: return "north";
    case Action::South: return "south";
    case Action::East: return "east";
    case Action::West: return "west";
  }
  return "?";
}

bool action_from_name(const std::string& name, Action* out) {
  std::string n = lower(name);
  for (int i = 0; i < kNumActions; ++i) {
    if (n == action_name(static_cast<Action>(i))) {
      *out = static_cast<Action>(i);
      return true;
    }
  }
  return false;
}

const char* channel_name(Channel c) {
  switch (c) {
    case Channel::Wall: return "wall";
    case Channel::Food: return "food";
    case Channel::Capsule: return "capsule";
    case Channel::Ghost: return "ghost";
    case Channel::ScaredGhost: return "scared_ghost";
    case Channel::Agent: return "agent";
  }
  return "?";
}

bool channel_from_name(const std::string& name, Channel* out) {
  std::string n = lower(name);
  for (int i = 0; i < kChannelsPerFrame; ++i) {
    if (n == channel_name(static_cast<Channel>(i))) {
      *out = static_cast<Channel>(i);
      return true;
    }
  }
  return false;
}

}  // namespace rlx
