#include "rlx/trajectory.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "rlx/error.hpp"

namespace rlx {
namespace {

void format_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("trajectory: bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string rle_encode_state(const GridState& s) {
  std::string out;
  const int hw = s.height * s.width;
  for (int f = 0; f < kFrameCount; ++f) {
    const std::vector<uint8_t>& frame = s.frames[static_cast<size_t>(f)];
    for (int c = 0; c < kChannelsPerFrame; ++c) {
      if (f != 0 || c != 0) out.push_back(';');
      const uint8_t* ch = frame.data() + static_cast<size_t>(c) * hw;
      int i = 0;
      bool first = true;
      while (i < hw) {
        int j = i;
        while (j < hw && ch[j] == ch[i]) ++j;
        if (!first) out.push_back(',');
        first = false;
        out += std::to_string(j - i);
        out.push_back('x');
        out.push_back(ch[i] ? '1' : '0');
        i = j;
      }
    }
  }
  return out;
}

void rle_decode_state(const std::string& text, int width, int height,
                      GridState* out) {
  out->width = width;
  out->height = height;
  const int hw = height * width;
  for (auto& f : out->frames) f.assign(static_cast<size_t>(out->frame_size()), 0);

  std::vector<std::string> channels;
  {
    std::string cur;
    for (char ch : text) {
      if (ch == ';') {
        channels.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    channels.push_back(cur);
  }
  if (channels.size() != static_cast<size_t>(kStateChannels)) {
    throw ParseError("trajectory: expected " + std::to_string(kStateChannels) +
                     " channels, got " + std::to_string(channels.size()));
  }
  for (int c = 0; c < kStateChannels; ++c) {
    int frame = c / kChannelsPerFrame;
    int local = c % kChannelsPerFrame;
    uint8_t* dst = out->frames[static_cast<size_t>(frame)].data() +
                   static_cast<size_t>(local) * hw;
    const std::string& enc = channels[static_cast<size_t>(c)];
    int pos = 0;
    size_t i = 0;
    while (i < enc.size()) {
      size_t x = enc.find('x', i);
      if (x == std::string::npos) throw ParseError("trajectory: bad run");
      int count = 0;
      auto res = std::from_chars(enc.data() + i, enc.data() + x, count);
      if (res.ec != std::errc() || count <= 0) {
        throw ParseError("trajectory: bad run length");
      }
      if (x + 1 >= enc.size() || (enc[x + 1] != '0' && enc[x + 1] != '1')) {
        throw ParseError("trajectory: bad run value");
      }
      uint8_t value = enc[x + 1] == '1';
      if (pos + count > hw) throw ParseError("trajectory: run overflows grid");
      for (int k = 0; k < count; ++k) dst[pos + k] = value;
      pos += count;
      i = x + 2;
      if (i < enc.size()) {
        if (enc[i] != ',') throw ParseError("trajectory: expected ','");
        ++i;
      }
    }
    if (pos != hw) throw ParseError("trajectory: runs do not cover grid");
  }
}

void write_trajectory(std::ostream& out, int width, int height,
                      const std::vector<TrajectoryRecord>& records) {
  out << "rlx-trajectory v1 width=" << width << " height=" << height << "\n";
  std::string line;
  for (const TrajectoryRecord& r : records) {
    line.clear();
    line += rle_encode_state(r.state);
    line.push_back(' ');
    line += std::to_string(static_cast<int>(r.action));
    line.push_back(' ');
    format_double(line, r.reward);
    line.push_back(' ');
    line.push_back(r.done ? '1' : '0');
    line.push_back('\n');
    out << line;
  }
}

std::vector<TrajectoryRecord> read_trajectory(std::istream& in, int* width,
                                              int* height) {
  std::string header;
  if (!std::getline(in, header)) throw IoError("trajectory: empty stream");
  std::istringstream hs(header);
  std::string magic, version, wtok, htok;
  hs >> magic >> version >> wtok >> htok;
  if (magic != "rlx-trajectory" || version != "v1" ||
      wtok.rfind("width=", 0) != 0 || htok.rfind("height=", 0) != 0) {
    throw ParseError("trajectory: bad header '" + header + "'");
  }
  *width = std::stoi(wtok.substr(6));
  *height = std::stoi(htok.substr(7));

  std::vector<TrajectoryRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string rle, atok, rtok, dtok;
    if (!(ls >> rle >> atok >> rtok >> dtok)) {
      throw ParseError("trajectory: short record line");
    }
    TrajectoryRecord rec;
    rle_decode_state(rle, *width, *height, &rec.state);
    int a = std::stoi(atok);
    if (a < 0 || a >= kNumActions) throw ParseError("trajectory: bad action");
    rec.action = static_cast<Action>(a);
    rec.reward = parse_double(rtok);
    if (dtok != "0" && dtok != "1") throw ParseError("trajectory: bad done");
    rec.done = dtok == "1";
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace rlx
