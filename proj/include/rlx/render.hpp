#pragma once

#include <string>

#include "rlx/reconstruction.hpp"

namespace rlx {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;  // 3 bytes per pixel, row-major

  Image() = default;
  Image(int w, int h) : width(w), height(h),
                        rgb(static_cast<size_t>(w) * h * 3, 0) {}
  void set(int x, int y, uint8_t r, uint8_t g, uint8_t b);
  void fill_rect(int x0, int y0, int w, int h, uint8_t r, uint8_t g,
                 uint8_t b);
};

// Binary PPM (P6); output bytes are a pure function of the image.
void write_ppm(const std::string& path, const Image& img);
std::string ppm_bytes(const Image& img);

struct RenderOptions {
  int cell_px = 16;
  bool legend = true;
};

// Maze + entity rendering used as the base of the overlays: walls dark
// blue-gray, food faint dots, capsules larger dots, ghosts / scared ghosts /
// agent as distinct markers.
Image render_state(const GridState& state, const RenderOptions& opts = {});

// Per-cell brightness proportional to score / max|score| over the active
// cells (positive green, negative red).
struct AttributionRender {
  Image image;
  bool all_zero = false;  // every score was zero: flat frame, warning border
};
AttributionRender render_attribution(const GridState& state,
                                     const AttributionMap& map,
                                     const RenderOptions& opts = {});

// Cells within reachability lambda_norm * max colored by their winning
// action (west blue, south green, east red, north yellow; no label gray).
Image render_behavior(const GridState& state, const BehaviorMap& map,
                      const ReachabilityMap& reach, double lambda_norm,
                      const RenderOptions& opts = {});

// SVG variants carrying text labels and an explicit warning when every
// score is zero.
std::string svg_attribution(const GridState& state, const AttributionMap& map,
                            const RenderOptions& opts = {});
std::string svg_behavior(const GridState& state, const BehaviorMap& map,
                         const ReachabilityMap& reach, double lambda_norm,
                         const RenderOptions& opts = {});

}  // namespace rlx
