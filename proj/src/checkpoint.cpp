#include "rlx/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "rlx/error.hpp"

namespace rlx {
namespace {

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<uint64_t>(v));
}

void put_string(std::string& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out += s;
}

struct Reader {
  const uint8_t* p;
  size_t left;

  void need(size_t n) const {
    if (left < n) throw IoError("checkpoint: unexpected end of file");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
    p += 4;
    left -= 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
    p += 8;
    left -= 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    left -= n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const QNetwork& net,
                     const std::map<std::string, std::string>& metadata) {
  std::string buf;
  buf.reserve(net.param_count() * 8 + 4096);
  buf += "RLXQ";
  put_u32(buf, kCheckpointVersion);
  put_u32(buf, static_cast<uint32_t>(net.width));
  put_u32(buf, static_cast<uint32_t>(net.height));

  put_u32(buf, static_cast<uint32_t>(metadata.size()));
  for (const auto& [k, v] : metadata) {
    put_string(buf, k);
    put_string(buf, v);
  }

  const std::vector<ParamView> views = net.param_views();
  put_u32(buf, static_cast<uint32_t>(views.size()));
  for (const ParamView& v : views) {
    put_string(buf, v.name);
    put_u32(buf, static_cast<uint32_t>(v.shape.size()));
    for (int d : v.shape) put_u32(buf, static_cast<uint32_t>(d));
  }
  for (const ParamView& v : views) {
    for (size_t i = 0; i < v.size; ++i) put_f64(buf, v.data[i]);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("checkpoint: cannot open for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open: " + path);
  std::string raw((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  Reader r{reinterpret_cast<const uint8_t*>(raw.data()), raw.size()};

  r.need(4);
  if (std::memcmp(r.p, "RLXQ", 4) != 0) {
    throw IoError("checkpoint: bad magic (not an .rlxq file): " + path);
  }
  r.p += 4;
  r.left -= 4;

  uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionMismatchError("checkpoint: unsupported version " +
                               std::to_string(version));
  }
  int width = static_cast<int>(r.u32());
  int height = static_cast<int>(r.u32());

  Checkpoint ck;
  uint32_t n_meta = r.u32();
  for (uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    ck.metadata[k] = r.str();
  }

  Rng dummy(0);
  ck.net = QNetwork::init(width, height, dummy);
  std::vector<ParamView> views = ck.net.param_views();

  uint32_t n_layers = r.u32();
  if (n_layers != views.size()) {
    throw ManifestMismatchError("checkpoint: expected " +
                                std::to_string(views.size()) + " layers, got " +
                                std::to_string(n_layers));
  }
  for (const ParamView& v : views) {
    std::string name = r.str();
    if (name != v.name) {
      throw ManifestMismatchError("checkpoint: layer '" + name +
                                  "' where '" + v.name + "' expected");
    }
    uint32_t rank = r.u32();
    if (rank != v.shape.size()) {
      throw ManifestMismatchError("checkpoint: rank mismatch for " + v.name);
    }
    for (size_t d = 0; d < v.shape.size(); ++d) {
      uint32_t dim = r.u32();
      if (static_cast<int>(dim) != v.shape[d]) {
        throw ManifestMismatchError("checkpoint: shape mismatch for " + v.name);
      }
    }
  }
  for (ParamView& v : views) {
    for (size_t i = 0; i < v.size; ++i) v.data[i] = r.f64();
  }
  if (r.left != 0) {
    throw IoError("checkpoint: trailing bytes in " + path);
  }
  return ck;
}

}  // namespace rlx
