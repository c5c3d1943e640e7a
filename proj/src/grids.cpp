#include "adacs/grids.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace adacs {

namespace {

void require_dims(int w, int h, const char* what) {
  if (w <= 0 || h <= 0) {
    throw std::invalid_argument(std::string(what) + ": dimensions must be positive, got " +
                                std::to_string(w) + "x" + std::to_string(h));
  }
}

void require_length(size_t got, int w, int h, const char* what) {
  const size_t want = static_cast<size_t>(w) * static_cast<size_t>(h);
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": data length " + std::to_string(got) +
                                " does not match " + std::to_string(w) + "x" + std::to_string(h));
  }
}

}  // namespace

Image::Image(int w, int h, double fill) : width(w), height(h) {
  require_dims(w, h, "Image");
  if (fill < 0.0 || fill > 1.0 || !std::isfinite(fill)) {
    throw std::invalid_argument("Image: fill value outside [0,1]");
  }
  data.assign(static_cast<size_t>(w) * h, fill);
}

Image Image::from_data(int w, int h, std::vector<double> values) {
  require_dims(w, h, "Image");
  require_length(values.size(), w, h, "Image");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("Image: intensity outside [0,1]");
    }
  }
  Image img;
  img.width = w;
  img.height = h;
  img.data = std::move(values);
  return img;
}

DisplacementField::DisplacementField(int w, int h) : width(w), height(h) {
  require_dims(w, h, "DisplacementField");
  dx.assign(static_cast<size_t>(w) * h, 0.0);
  dy.assign(static_cast<size_t>(w) * h, 0.0);
}

DisplacementField DisplacementField::from_data(int w, int h, std::vector<double> dx_values,
                                               std::vector<double> dy_values) {
  require_dims(w, h, "DisplacementField");
  require_length(dx_values.size(), w, h, "DisplacementField.dx");
  require_length(dy_values.size(), w, h, "DisplacementField.dy");
  for (size_t i = 0; i < dx_values.size(); ++i) {
    if (!std::isfinite(dx_values[i]) || !std::isfinite(dy_values[i])) {
      throw std::invalid_argument("DisplacementField: non-finite entry");
    }
  }
  DisplacementField f;
  f.width = w;
  f.height = h;
  f.dx = std::move(dx_values);
  f.dy = std::move(dy_values);
  return f;
}

ScoreMap::ScoreMap(int w, int h, double fill) : width(w), height(h) {
  require_dims(w, h, "ScoreMap");
  if (!(fill >= 0.0 && fill <= 1.0)) {
    throw std::invalid_argument("ScoreMap: fill value outside [0,1]");
  }
  s.assign(static_cast<size_t>(w) * h, fill);
}

ScoreMap ScoreMap::from_data(int w, int h, std::vector<double> values) {
  require_dims(w, h, "ScoreMap");
  require_length(values.size(), w, h, "ScoreMap");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("ScoreMap: value outside [0,1]");
    }
  }
  ScoreMap sm;
  sm.width = w;
  sm.height = h;
  sm.s = std::move(values);
  return sm;
}

Mask::Mask(int w, int h, bool fill) : width(w), height(h) {
  require_dims(w, h, "Mask");
  m.assign(static_cast<size_t>(w) * h, fill ? 1 : 0);
}

size_t Mask::count() const {
  size_t n = 0;
  for (uint8_t v : m) n += (v != 0);
  return n;
}

void require_same_shape(int wa, int ha, int wb, int hb, const char* what) {
  if (wa != wb || ha != hb) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + std::to_string(wa) +
                                "x" + std::to_string(ha) + " vs " + std::to_string(wb) + "x" +
                                std::to_string(hb));
  }
}

void require_valid_score(const ScoreMap& score, const char* what) {
  for (double v : score.s) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument(std::string(what) + ": score value outside [0,1]");
    }
  }
}

}  // namespace adacs
