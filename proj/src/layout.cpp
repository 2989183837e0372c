#include "rlx/layout.hpp"

#include <fstream>
#include <sstream>

#include "rlx/error.hpp"

namespace rlx {

int Layout::food_count() const {
  int n = 0;
  for (CellType c : cells) n += c == CellType::Food;
  return n;
}

int Layout::capsule_count() const {
  int n = 0;
  for (CellType c : cells) n += c == CellType::Capsule;
  return n;
}

Layout Layout::parse(const std::string& text) {
  std::vector<std::string> rows;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.eof()) break;
    rows.push_back(line);
  }
  while (!rows.empty() && rows.back().empty()) rows.pop_back();
  if (rows.empty()) throw InvalidLayoutError("layout: empty file");

  Layout lay;
  lay.height = static_cast<int>(rows.size());
  lay.width = static_cast<int>(rows[0].size());
  for (const std::string& r : rows) {
    if (static_cast<int>(r.size()) != lay.width) {
      throw NonRectangularError("layout: rows have differing lengths");
    }
  }
  if (lay.width < 3 || lay.height < 3) {
    throw InvalidLayoutError("layout: must be at least 3x3");
  }

  lay.cells.assign(static_cast<size_t>(lay.width) * lay.height,
                   CellType::Empty);
  int agents = 0;
  for (int y = 0; y < lay.height; ++y) {
    for (int x = 0; x < lay.width; ++x) {
      char ch = rows[y][static_cast<size_t>(x)];
      CellType& cell = lay.cells[static_cast<size_t>(y) * lay.width + x];
      switch (ch) {
        case '%': cell = CellType::Wall; break;
        case '.': cell = CellType::Food; break;
        case 'o': cell = CellType::Capsule; break;
        case ' ': cell = CellType::Empty; break;
        case 'P':
          cell = CellType::Empty;
          lay.agent_spawn = {x, y};
          ++agents;
          break;
        case 'G':
          cell = CellType::Empty;
          lay.ghost_spawns.push_back({x, y});
          break;
        default:
          throw UnknownCharError(std::string("layout: unknown character '") +
                                 ch + "'");
      }
    }
  }
  if (agents != 1) {
    throw MissingAgentError("layout: expected exactly one 'P', found " +
                            std::to_string(agents));
  }
  for (int x = 0; x < lay.width; ++x) {
    if (!lay.is_wall(x, 0) || !lay.is_wall(x, lay.height - 1)) {
      throw InvalidLayoutError("layout: border must be all walls");
    }
  }
  for (int y = 0; y < lay.height; ++y) {
    if (!lay.is_wall(0, y) || !lay.is_wall(lay.width - 1, y)) {
      throw InvalidLayoutError("layout: border must be all walls");
    }
  }
  return lay;
}

Layout Layout::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open layout file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace rlx
