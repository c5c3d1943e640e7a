#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace adacs {

// Row-major scalar grids. Pixel (x, y) lives at index y * width + x:
// x indexes columns, y indexes rows. All arithmetic is double precision.

struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // intensities in [0, 1]

  Image() = default;
  Image(int w, int h, double fill = 0.0);
  static Image from_data(int w, int h, std::vector<double> values);

  double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  size_t size() const { return data.size(); }
};

struct DisplacementField {
  int width = 0;
  int height = 0;
  std::vector<double> dx;  // pixel units, x component
  std::vector<double> dy;  // pixel units, y component

  DisplacementField() = default;
  DisplacementField(int w, int h);
  static DisplacementField from_data(int w, int h, std::vector<double> dx_values,
                                     std::vector<double> dy_values);

  size_t size() const { return dx.size(); }
};

struct ScoreMap {
  int width = 0;
  int height = 0;
  std::vector<double> s;  // in [0, 1]

  ScoreMap() = default;
  ScoreMap(int w, int h, double fill);
  static ScoreMap from_data(int w, int h, std::vector<double> values);

  size_t size() const { return s.size(); }
};

struct ResidualMap {
  int width = 0;
  int height = 0;
  std::vector<double> r;  // squared intensity units, nonnegative

  size_t size() const { return r.size(); }
};

struct Mask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> m;  // 0 or 1

  Mask() = default;
  Mask(int w, int h, bool fill = false);

  bool at(int x, int y) const { return m[static_cast<size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { m[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
  size_t size() const { return m.size(); }
  size_t count() const;
  bool empty() const { return count() == 0; }
};

// Throws std::invalid_argument naming `what` when the two shapes differ.
void require_same_shape(int wa, int ha, int wb, int hb, const char* what);

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  require_same_shape(a.width, a.height, b.width, b.height, what);
}

// Throws std::invalid_argument when any score value leaves [0, 1].
void require_valid_score(const ScoreMap& score, const char* what);

}  // namespace adacs
