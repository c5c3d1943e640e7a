#include "adacs/field_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adacs {

namespace {

inline double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

Image warp_bilinear(const Image& src, const DisplacementField& disp) {
  require_same_shape(src, disp, "warp_bilinear");
  const int w = src.width, h = src.height;
  Image out(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      const double sx = clamp(x + disp.dx[i], 0.0, w - 1.0);
      const double sy = clamp(y + disp.dy[i], 0.0, h - 1.0);
      const int x0 = static_cast<int>(sx);
      const int y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      const double top = (1.0 - fx) * src.at(x0, y0) + fx * src.at(x1, y0);
      const double bot = (1.0 - fx) * src.at(x0, y1) + fx * src.at(x1, y1);
      // convex combination of in-range values; min() absorbs the odd ulp
      out.data[i] = std::min(1.0, (1.0 - fy) * top + fy * bot);
    }
  }
  return out;
}

void warp_bilinear_backward(const Image& src, const DisplacementField& disp,
                            const std::vector<double>& d_warped, std::vector<double>& d_dx,
                            std::vector<double>& d_dy) {
  require_same_shape(src, disp, "warp_bilinear_backward");
  const int w = src.width, h = src.height;
  if (d_warped.size() != src.size() || d_dx.size() != src.size() || d_dy.size() != src.size()) {
    throw std::invalid_argument("warp_bilinear_backward: adjoint buffer size mismatch");
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      const double a = d_warped[i];
      if (a == 0.0) continue;
      const double px = x + disp.dx[i];
      const double py = y + disp.dy[i];
      // right-sided derivative of the clamp: saturated samples are flat
      const bool live_x = px >= 0.0 && px < w - 1.0;
      const bool live_y = py >= 0.0 && py < h - 1.0;
      const double sx = clamp(px, 0.0, w - 1.0);
      const double sy = clamp(py, 0.0, h - 1.0);
      const int x0 = static_cast<int>(sx);
      const int y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      if (live_x) {
        const double dv_dsx = (1.0 - fy) * (src.at(x1, y0) - src.at(x0, y0)) +
                              fy * (src.at(x1, y1) - src.at(x0, y1));
        d_dx[i] += a * dv_dsx;
      }
      if (live_y) {
        const double dv_dsy = (1.0 - fx) * (src.at(x0, y1) - src.at(x0, y0)) +
                              fx * (src.at(x1, y1) - src.at(x1, y0));
        d_dy[i] += a * dv_dsy;
      }
    }
  }
}

Mask warp_nearest(const Mask& mask, const DisplacementField& disp) {
  require_same_shape(mask, disp, "warp_nearest");
  const int w = mask.width, h = mask.height;
  Mask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      const double sx = clamp(x + disp.dx[i], 0.0, w - 1.0);
      const double sy = clamp(y + disp.dy[i], 0.0, h - 1.0);
      const int xi = static_cast<int>(std::llround(sx));
      const int yi = static_cast<int>(std::llround(sy));
      out.m[i] = mask.m[static_cast<size_t>(yi) * w + xi];
    }
  }
  return out;
}

ResidualMap residual_map(const Image& target, const Image& warped) {
  require_same_shape(target, warped, "residual_map");
  ResidualMap r;
  r.width = target.width;
  r.height = target.height;
  r.r.resize(target.size());
  for (size_t i = 0; i < target.size(); ++i) {
    const double d = target.data[i] - warped.data[i];
    r.r[i] = d * d;
  }
  return r;
}

SpatialGradient spatial_gradient(int width, int height, const std::vector<double>& grid) {
  if (width <= 0 || height <= 0 || grid.size() != static_cast<size_t>(width) * height) {
    throw std::invalid_argument("spatial_gradient: bad grid shape");
  }
  SpatialGradient g;
  g.gx.assign(grid.size(), 0.0);
  g.gy.assign(grid.size(), 0.0);
  for (int y = 0; y < height; ++y) {
    const size_t row = static_cast<size_t>(y) * width;
    for (int x = 0; x + 1 < width; ++x) {
      g.gx[row + x] = grid[row + x + 1] - grid[row + x];
    }
    if (y + 1 < height) {
      for (int x = 0; x < width; ++x) {
        g.gy[row + x] = grid[row + width + x] - grid[row + x];
      }
    }
  }
  return g;
}

void add_gradient_adjoint(int width, int height, const std::vector<double>& ax,
                          const std::vector<double>& ay, std::vector<double>& out) {
  const size_t n = static_cast<size_t>(width) * height;
  if (ax.size() != n || ay.size() != n || out.size() != n) {
    throw std::invalid_argument("add_gradient_adjoint: buffer size mismatch");
  }
  for (int y = 0; y < height; ++y) {
    const size_t row = static_cast<size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      if (x > 0) acc += ax[row + x - 1];
      if (x + 1 < width) acc -= ax[row + x];
      if (y > 0) acc += ay[row - width + x];
      if (y + 1 < height) acc -= ay[row + x];
      out[row + x] += acc;
    }
  }
}

}  // namespace adacs
