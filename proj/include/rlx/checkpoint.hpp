#pragma once

#include <map>
#include <string>

#include "rlx/qnetwork.hpp"

namespace rlx {

// Binary network checkpoint (.rlxq):
//
//   magic "RLXQ" | version u32 | width u32 | height u32
//   | metadata count u32, then (key, value) string pairs
//   | layer count u32, then per layer: name string, rank u32, dims u32...
//   | per layer, raw float64 payload
//
// All integers and doubles are little-endian regardless of host byte order,
// strings are u32 length + bytes. Loading verifies the layer manifest
// against the expected network structure.
struct Checkpoint {
  QNetwork net;
  std::map<std::string, std::string> metadata;
};

inline constexpr uint32_t kCheckpointVersion = 1;

// Throws IoError when the file cannot be written.
void save_checkpoint(const std::string& path, const QNetwork& net,
                     const std::map<std::string, std::string>& metadata = {});

// Throws IoError on open/short-read failures, VersionMismatchError on an
// unknown version and ManifestMismatchError when the stored layers do not
// match the expected architecture.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace rlx
