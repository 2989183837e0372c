#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "rlx/csv.hpp"
#include "rlx/error.hpp"
#include "rlx/manifest.hpp"

using namespace rlx;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("rlx-io-test-" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("csv writer emits header plus rows with unix line ends") {
  TempDir tmp;
  std::string path = tmp.file("t.csv");
  {
    CsvWriter csv(path, {"a", "b", "c"});
    csv.row({"1", "x", CsvWriter::num(0.5)});
    csv.row({CsvWriter::num(2), "y", CsvWriter::num(-3.25)});
  }
  CHECK(read_all(path) == "a,b,c\n1,x,0.5\n2,y,-3.25\n");
}

TEST_CASE("csv numbers are shortest round-trip decimals") {
  CHECK(CsvWriter::num(0.1) == "0.1");
  CHECK(CsvWriter::num(1.0 / 3.0) == "0.3333333333333333");
  CHECK(CsvWriter::num(2.0) == "2");
  CHECK(CsvWriter::num(-0.0) == "-0");
  CHECK(CsvWriter::num(42) == "42");
  CHECK(CsvWriter::num(1e300) == "1e+300");
  // Round-trip exactness.
  double v = 0.1 + 0.2;
  CHECK(std::stod(CsvWriter::num(v)) == v);
}

TEST_CASE("csv writer rejects rows with the wrong width") {
  TempDir tmp;
  CsvWriter csv(tmp.file("w.csv"), {"a", "b"});
  CHECK_THROWS_AS(csv.row({"only-one"}), Error);
}

TEST_CASE("csv writer refuses unopenable paths") {
  CHECK_THROWS_AS(CsvWriter("/nonexistent-dir/x.csv", {"a"}), IoError);
}

TEST_CASE("manifest round-trips command and arguments") {
  TempDir tmp;
  RunManifest m;
  m.version = "0.3.1";
  m.command = "train";
  m.args = {"--layout", "maps/medium.lay", "--seed", "7",
            "--learning-rate", "0.00025"};
  std::string path = tmp.file("run_manifest.txt");
  write_manifest(path, m);

  RunManifest back = read_manifest(path);
  CHECK(back.version == m.version);
  CHECK(back.command == m.command);
  CHECK(back.args == m.args);
}

TEST_CASE("manifest read rejects missing or malformed files") {
  TempDir tmp;
  CHECK_THROWS_AS(read_manifest(tmp.file("absent.txt")), IoError);

  std::string bad = tmp.file("bad.txt");
  {
    std::ofstream out(bad);
    out << "gibberish without structure\n";
  }
  CHECK_THROWS_AS(read_manifest(bad), ParseError);
}
