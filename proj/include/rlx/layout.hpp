#pragma once

#include <string>
#include <vector>

#include "rlx/types.hpp"

namespace rlx {

// Static cell content of a maze cell (entities live in GridState).
enum class CellType : uint8_t { Empty = 0, Wall = 1, Food = 2, Capsule = 3 };

// Immutable maze description parsed from a .lay text file:
//   '%' wall   '.' food   'o' capsule   'P' agent spawn   'G' ghost spawn
//   ' ' empty
// Rows are listed top to bottom; (x, y) = (column, row) with origin at the
// top-left corner.
struct Layout {
  int width = 0;
  int height = 0;
  std::vector<CellType> cells;      // height*width, row-major
  Coord agent_spawn;
  std::vector<Coord> ghost_spawns;  // in reading order

  CellType at(int x, int y) const { return cells[y * width + x]; }
  bool is_wall(int x, int y) const { return at(x, y) == CellType::Wall; }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  int food_count() const;
  int capsule_count() const;

  // Errors: NonRectangularError, MissingAgentError (zero or multiple 'P'),
  // UnknownCharError, InvalidLayoutError (size < 3x3 or non-wall border).
  static Layout parse(const std::string& text);
  static Layout load_file(const std::string& path);  // IoError on failure
};

}  // namespace rlx
