#include "rlx/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rlx/csv.hpp"
#include "rlx/error.hpp"

namespace rlx {
namespace {

struct Rgb {
  uint8_t r, g, b;
};

constexpr Rgb kWall{44, 48, 82};
constexpr Rgb kFloor{12, 12, 14};
constexpr Rgb kFood{150, 150, 150};
constexpr Rgb kCapsule{220, 220, 255};
constexpr Rgb kGhost{210, 70, 200};
constexpr Rgb kScared{110, 190, 255};
constexpr Rgb kAgent{255, 255, 255};
constexpr Rgb kNoLabelGray{120, 120, 120};
constexpr Rgb kWarning{235, 60, 40};

// Action colors: west blue, south green, east red, north yellow.
constexpr std::array<Rgb, kNumActions> kActionColor{{
    {240, 210, 40},  // north
    {40, 200, 80},   // south
    {230, 60, 50},   // east
    {60, 90, 255},   // west
}};

constexpr int kLegendPx = 10;

uint8_t bit_at(const GridState& s, Channel c, int x, int y) {
  return s.frame_bit(0, c, x, y);
}

int cell_value_count(const GridState& s) { return s.height * s.width; }

// Sum of a cell's current-frame scores over the non-wall channels: the
// per-cell display value of an attribution map.
double cell_score(const AttributionMap& map, const GridState& s, int x,
                  int y) {
  const int hw = cell_value_count(s);
  double v = 0.0;
  for (int c = 0; c < kChannelsPerFrame; ++c) {
    if (static_cast<Channel>(c) == Channel::Wall) continue;
    v += map.scores[static_cast<size_t>(c * hw + y * s.width + x)];
  }
  return v;
}

bool cell_active(const GridState& s, int x, int y) {
  for (int c = 0; c < kChannelsPerFrame; ++c) {
    if (static_cast<Channel>(c) == Channel::Wall) continue;
    if (bit_at(s, static_cast<Channel>(c), x, y)) return true;
  }
  return false;
}

void draw_cell(Image& img, int cx, int cy, int px, Rgb color) {
  img.fill_rect(cx * px, cy * px, px, px, color.r, color.g, color.b);
}

void draw_center_dot(Image& img, int cx, int cy, int px, int radius,
                     Rgb color) {
  const int x0 = cx * px + px / 2 - radius;
  const int y0 = cy * px + px / 2 - radius;
  img.fill_rect(x0, y0, 2 * radius, 2 * radius, color.r, color.g, color.b);
}

void draw_border(Image& img, int cx, int cy, int px, int thick, Rgb color) {
  const int x0 = cx * px, y0 = cy * px;
  img.fill_rect(x0, y0, px, thick, color.r, color.g, color.b);
  img.fill_rect(x0, y0 + px - thick, px, thick, color.r, color.g, color.b);
  img.fill_rect(x0, y0, thick, px, color.r, color.g, color.b);
  img.fill_rect(x0 + px - thick, y0, thick, px, color.r, color.g, color.b);
}

void draw_entities(Image& img, const GridState& s, int px) {
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      if (bit_at(s, Channel::Food, x, y)) {
        draw_center_dot(img, x, y, px, std::max(1, px / 8), kFood);
      }
      if (bit_at(s, Channel::Capsule, x, y)) {
        draw_center_dot(img, x, y, px, std::max(2, px / 4), kCapsule);
      }
      if (bit_at(s, Channel::Ghost, x, y)) {
        draw_border(img, x, y, px, std::max(1, px / 8), kGhost);
      }
      if (bit_at(s, Channel::ScaredGhost, x, y)) {
        draw_border(img, x, y, px, std::max(1, px / 8), kScared);
      }
      if (bit_at(s, Channel::Agent, x, y)) {
        draw_border(img, x, y, px, std::max(1, px / 6), kAgent);
      }
    }
  }
}

Image base_image(const GridState& s, const RenderOptions& opts) {
  const int px = opts.cell_px;
  const int legend = opts.legend ? kLegendPx : 0;
  Image img(s.width * px, s.height * px + legend);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      draw_cell(img, x, y, px, bit_at(s, Channel::Wall, x, y) ? kWall : kFloor);
    }
  }
  return img;
}

void legend_attribution(Image& img, const GridState& s,
                        const RenderOptions& opts) {
  if (!opts.legend) return;
  // Color ramp negative (red) -> zero (black) -> positive (green).
  const int y0 = s.height * opts.cell_px;
  for (int x = 0; x < img.width; ++x) {
    const double t = 2.0 * x / std::max(1, img.width - 1) - 1.0;
    const uint8_t mag = static_cast<uint8_t>(std::lround(std::fabs(t) * 255));
    for (int y = y0; y < img.height; ++y) {
      if (t < 0) {
        img.set(x, y, mag, 0, 0);
      } else {
        img.set(x, y, 0, mag, 0);
      }
    }
  }
}

void legend_behavior(Image& img, const GridState& s,
                     const RenderOptions& opts) {
  if (!opts.legend) return;
  const int y0 = s.height * opts.cell_px;
  const int n = kNumActions + 1;
  const int w = img.width / n;
  for (int i = 0; i < n; ++i) {
    Rgb c = i < kNumActions ? kActionColor[static_cast<size_t>(i)]
                            : kNoLabelGray;
    img.fill_rect(i * w, y0, i == n - 1 ? img.width - i * w : w, kLegendPx,
                  c.r, c.g, c.b);
  }
}

std::string svg_header(int w, int h) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h
      << "\">\n";
  return out.str();
}

std::string svg_rect(int x, int y, int w, int h, Rgb c) {
  std::ostringstream out;
  out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w
      << "\" height=\"" << h << "\" fill=\"rgb(" << int(c.r) << ',' << int(c.g)
      << ',' << int(c.b) << ")\"/>\n";
  return out.str();
}

std::string svg_text(int x, int y, const std::string& text) {
  std::ostringstream out;
  out << "<text x=\"" << x << "\" y=\"" << y
      << "\" fill=\"white\" font-family=\"monospace\" font-size=\"10\">"
      << text << "</text>\n";
  return out.str();
}

}  // namespace

void Image::set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
  if (x < 0 || x >= width || y < 0 || y >= height) return;
  const size_t i = (static_cast<size_t>(y) * width + x) * 3;
  rgb[i] = r;
  rgb[i + 1] = g;
  rgb[i + 2] = b;
}

void Image::fill_rect(int x0, int y0, int w, int h, uint8_t r, uint8_t g,
                      uint8_t b) {
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) set(x, y, r, g, b);
  }
}

std::string ppm_bytes(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
  return out;
}

void write_ppm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("render: cannot open for writing: " + path);
  const std::string bytes = ppm_bytes(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("render: write failed: " + path);
}

Image render_state(const GridState& s, const RenderOptions& opts) {
  Image img = base_image(s, opts);
  draw_entities(img, s, opts.cell_px);
  return img;
}

AttributionRender render_attribution(const GridState& s,
                                     const AttributionMap& map,
                                     const RenderOptions& opts) {
  if (map.scores.size() != static_cast<size_t>(s.feature_count())) {
    throw ShapeMismatchError("render_attribution: map/state size mismatch");
  }
  AttributionRender out;
  out.image = base_image(s, opts);

  double max_abs = 0.0;
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      if (cell_active(s, x, y)) {
        max_abs = std::max(max_abs, std::fabs(cell_score(map, s, x, y)));
      }
    }
  }
  out.all_zero = max_abs == 0.0;

  if (!out.all_zero) {
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        if (bit_at(s, Channel::Wall, x, y) || !cell_active(s, x, y)) continue;
        const double v = cell_score(map, s, x, y) / max_abs;
        const uint8_t mag =
            static_cast<uint8_t>(std::lround(std::fabs(v) * 255));
        if (v >= 0) {
          draw_cell(out.image, x, y, opts.cell_px, {0, mag, 0});
        } else {
          draw_cell(out.image, x, y, opts.cell_px, {mag, 0, 0});
        }
      }
    }
  }
  draw_entities(out.image, s, opts.cell_px);
  legend_attribution(out.image, s, opts);
  if (out.all_zero) {
    // Warning annotation: red frame around the whole image.
    out.image.fill_rect(0, 0, out.image.width, 2, kWarning.r, kWarning.g,
                        kWarning.b);
    out.image.fill_rect(0, out.image.height - 2, out.image.width, 2,
                        kWarning.r, kWarning.g, kWarning.b);
    out.image.fill_rect(0, 0, 2, out.image.height, kWarning.r, kWarning.g,
                        kWarning.b);
    out.image.fill_rect(out.image.width - 2, 0, 2, out.image.height,
                        kWarning.r, kWarning.g, kWarning.b);
  }
  return out;
}

Image render_behavior(const GridState& s, const BehaviorMap& map,
                      const ReachabilityMap& reach, double lambda_norm,
                      const RenderOptions& opts) {
  if (map.labels.size() != static_cast<size_t>(s.feature_count()) ||
      reach.values.size() != map.labels.size()) {
    throw ShapeMismatchError("render_behavior: map/state size mismatch");
  }
  Image img = base_image(s, opts);
  const double lambda = lambda_norm * reach.max_reachability;
  const int hw = cell_value_count(s);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      if (bit_at(s, Channel::Wall, x, y)) continue;
      // A cell shows the label of its current-frame features when they are
      // unanimous; mixed labels fall back to the no-label gray.
      int label = kNoLabel;
      bool mixed = false;
      bool any_feature = false;
      for (int c = 0; c < kChannelsPerFrame; ++c) {
        if (static_cast<Channel>(c) == Channel::Wall) continue;
        if (!bit_at(s, static_cast<Channel>(c), x, y)) continue;
        const size_t i = static_cast<size_t>(c * hw + y * s.width + x);
        any_feature = true;
        if (reach.values[i] > lambda) continue;
        if (map.labels[i] == kNoLabel) continue;
        if (label == kNoLabel) {
          label = map.labels[i];
        } else if (label != map.labels[i]) {
          mixed = true;
        }
      }
      if (!any_feature) continue;
      const size_t cell_i = static_cast<size_t>(y * s.width + x);
      const double r = reach.values[cell_i];  // channel 0 shares the cell r
      if (r > lambda) continue;               // only features within radius
      Rgb color = kNoLabelGray;
      if (label != kNoLabel && !mixed) {
        color = kActionColor[static_cast<size_t>(label)];
      }
      draw_cell(img, x, y, opts.cell_px, color);
    }
  }
  draw_entities(img, s, opts.cell_px);
  legend_behavior(img, s, opts);
  return img;
}

std::string svg_attribution(const GridState& s, const AttributionMap& map,
                            const RenderOptions& opts) {
  const int px = opts.cell_px;
  const int w = s.width * px;
  const int h = s.height * px + (opts.legend ? 16 : 0);
  double max_abs = 0.0;
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      if (cell_active(s, x, y)) {
        max_abs = std::max(max_abs, std::fabs(cell_score(map, s, x, y)));
      }
    }
  }
  std::string out = svg_header(w, h);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      Rgb c = bit_at(s, Channel::Wall, x, y) ? kWall : kFloor;
      if (max_abs > 0.0 && !bit_at(s, Channel::Wall, x, y) &&
          cell_active(s, x, y)) {
        const double v = cell_score(map, s, x, y) / max_abs;
        const uint8_t mag = static_cast<uint8_t>(std::lround(std::fabs(v) * 255));
        c = v >= 0 ? Rgb{0, mag, 0} : Rgb{mag, 0, 0};
      }
      out += svg_rect(x * px, y * px, px, px, c);
    }
  }
  if (opts.legend) {
    std::string label = std::string(method_name(map.method)) + " " +
                        action_name(map.qoi.action) + " " +
                        stage_name(map.qoi.stage) +
                        " max|score|=" + CsvWriter::num(max_abs);
    if (max_abs == 0.0) label += " WARNING: all scores zero";
    out += svg_text(2, s.height * px + 12, label);
  }
  out += "</svg>\n";
  return out;
}

std::string svg_behavior(const GridState& s, const BehaviorMap& map,
                         const ReachabilityMap& reach, double lambda_norm,
                         const RenderOptions& opts) {
  const int px = opts.cell_px;
  const int w = s.width * px;
  const int h = s.height * px + (opts.legend ? 16 : 0);
  const double lambda = lambda_norm * reach.max_reachability;
  const int hw = cell_value_count(s);
  std::string out = svg_header(w, h);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      Rgb c = bit_at(s, Channel::Wall, x, y) ? kWall : kFloor;
      if (!bit_at(s, Channel::Wall, x, y) &&
          reach.values[static_cast<size_t>(y * s.width + x)] <= lambda &&
          cell_active(s, x, y)) {
        int label = kNoLabel;
        bool mixed = false;
        for (int ch = 0; ch < kChannelsPerFrame; ++ch) {
          if (static_cast<Channel>(ch) == Channel::Wall) continue;
          if (!bit_at(s, static_cast<Channel>(ch), x, y)) continue;
          const size_t i = static_cast<size_t>(ch * hw + y * s.width + x);
          if (map.labels[i] == kNoLabel) continue;
          if (label == kNoLabel) {
            label = map.labels[i];
          } else if (label != map.labels[i]) {
            mixed = true;
          }
        }
        c = (label != kNoLabel && !mixed)
                ? kActionColor[static_cast<size_t>(label)]
                : kNoLabelGray;
      }
      out += svg_rect(x * px, y * px, px, px, c);
    }
  }
  if (opts.legend) {
    out += svg_text(2, s.height * px + 12,
                    std::string(method_name(map.method)) + " " +
                        stage_name(map.stage) + " lambda_norm=" +
                        CsvWriter::num(lambda_norm) +
                        " (yellow=N green=S red=E blue=W gray=none)");
  }
  out += "</svg>\n";
  return out;
}

}  // namespace rlx
