#include "rlx/manifest.hpp"

#include <fstream>

#include "rlx/error.hpp"

namespace rlx {

void write_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("manifest: cannot open for writing: " + path);
  out << "rlx_version=" << m.version << "\n";
  out << "command=" << m.command << "\n";
  for (const std::string& a : m.args) out << "arg=" << a << "\n";
  if (!out) throw IoError("manifest: write failed: " + path);
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("manifest: cannot open: " + path);
  RunManifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("manifest: expected key=value, got '" + line + "'");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "rlx_version") {
      m.version = value;
    } else if (key == "command") {
      m.command = value;
    } else if (key == "arg") {
      m.args.push_back(value);
    } else {
      throw ParseError("manifest: unknown key '" + key + "'");
    }
  }
  if (m.command.empty()) throw ParseError("manifest: missing command");
  return m;
}

}  // namespace rlx
