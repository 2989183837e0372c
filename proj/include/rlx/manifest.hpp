#pragma once

#include <string>
#include <vector>

namespace rlx {

// Record of one CLI invocation, written next to a command's artifacts. The
// `replay` subcommand re-runs the stored command with a fresh output
// directory; because every random decision is seed-derived, the replayed
// artifacts are byte-identical.
struct RunManifest {
  std::string version;            // toolkit version that produced the run
  std::string command;            // subcommand name
  std::vector<std::string> args;  // original arguments, without --out
};

inline constexpr const char* kManifestFilename = "run_manifest.txt";

void write_manifest(const std::string& path, const RunManifest& m);

// Throws IoError when unreadable, ParseError on unknown structure.
RunManifest read_manifest(const std::string& path);

}  // namespace rlx
