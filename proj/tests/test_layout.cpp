#include "doctest.h"
#include "rlx/error.hpp"
#include "rlx/layout.hpp"

using namespace rlx;

namespace {
const char* kTiny =
    "%%%%%\n"
    "%.o.%\n"
    "%P G%\n"
    "%%%%%\n";
}

TEST_CASE("parse reads dimensions, cells and spawns") {
  const Layout l = Layout::parse(kTiny);
  CHECK(l.width == 5);
  CHECK(l.height == 4);
  CHECK(l.food_count() == 2);
  CHECK(l.capsule_count() == 1);
  CHECK(l.agent_spawn == Coord{1, 2});
  REQUIRE(l.ghost_spawns.size() == 1);
  CHECK(l.ghost_spawns[0] == Coord{3, 2});
  CHECK(l.is_wall(0, 0));
  CHECK(l.at(1, 1) == CellType::Food);
  CHECK(l.at(2, 1) == CellType::Capsule);
  CHECK(l.at(2, 2) == CellType::Empty);
}

TEST_CASE("trailing newline is optional") {
  const Layout a = Layout::parse("%%%\n%P%\n%%%\n");
  const Layout b = Layout::parse("%%%\n%P%\n%%%");
  CHECK(a.width == b.width);
  CHECK(a.height == b.height);
  CHECK(a.cells == b.cells);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(Layout::parse("%%%\n%P%%\n%%%\n"), NonRectangularError);
  CHECK_THROWS_AS(Layout::parse("%%%\n%X%\n%%%\n"), UnknownCharError);
  CHECK_THROWS_AS(Layout::parse("%%%\n% %\n%%%\n"), MissingAgentError);
  CHECK_THROWS_AS(Layout::parse("%%%%\n%PP%\n%%%%\n"), MissingAgentError);
  CHECK_THROWS_AS(Layout::parse("%%\n%P\n"), InvalidLayoutError);
  // border must be solid wall
  CHECK_THROWS_AS(Layout::parse("%%%\n%P%\n%.%\n"), InvalidLayoutError);
}

TEST_CASE("bundled medium maze matches its design") {
  const Layout l = Layout::load_file(RLX_SOURCE_DIR "/maps/medium.lay");
  CHECK(l.width == 20);
  CHECK(l.height == 11);
  CHECK(l.food_count() == 97);
  CHECK(l.capsule_count() == 2);
  CHECK(l.ghost_spawns.size() == 2);
}

TEST_CASE("bundled small maze matches its design") {
  const Layout l = Layout::load_file(RLX_SOURCE_DIR "/maps/small.lay");
  CHECK(l.width == 7);
  CHECK(l.height == 7);
  CHECK(l.food_count() == 20);
  CHECK(l.capsule_count() == 0);
  CHECK(l.ghost_spawns.empty());
}

TEST_CASE("missing file raises IoError") {
  CHECK_THROWS_AS(Layout::load_file("/nonexistent/nope.lay"), IoError);
}
