#include "adacs/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adacs/field_ops.hpp"
#include "adacs/rng.hpp"

namespace adacs {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

// rng stream ids within one pair
enum : uint64_t { kTexture = 1, kGeom = 2, kField = 3, kNoise = 4, kNuisance = 5 };

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

void minmax_rescale(std::vector<double>& g, double lo, double hi) {
  double mn = g[0], mx = g[0];
  for (double v : g) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  const double span = mx > mn ? mx - mn : 1.0;
  for (double& v : g) v = lo + (hi - lo) * (v - mn) / span;
}

}  // namespace

std::vector<double> gaussian_blur(int width, int height, const std::vector<double>& grid,
                                  double sigma) {
  if (grid.size() != static_cast<size_t>(width) * height) {
    throw std::invalid_argument("gaussian_blur: bad grid shape");
  }
  if (sigma <= 0.0) return grid;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double ksum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i / sigma) * (i / sigma));
    ksum += kernel[i + radius];
  }
  for (double& k : kernel) k /= ksum;

  std::vector<double> tmp(grid.size()), out(grid.size());
  for (int y = 0; y < height; ++y) {
    const double* row = grid.data() + static_cast<size_t>(y) * width;
    double* trow = tmp.data() + static_cast<size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[i + radius] * row[std::clamp(x + i, 0, width - 1)];
      }
      trow[x] = acc;
    }
  }
  for (int y = 0; y < height; ++y) {
    double* orow = out.data() + static_cast<size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int sy = std::clamp(y + i, 0, height - 1);
        acc += kernel[i + radius] * tmp[static_cast<size_t>(sy) * width + x];
      }
      orow[x] = acc;
    }
  }
  return out;
}

void validate_synth_config(const SynthConfig& cfg) {
  if (cfg.size < 8) throw std::invalid_argument("SynthConfig: size too small");
  if (!(cfg.amplitude >= 0.0 && cfg.amplitude < cfg.size / 4.0)) {
    throw std::invalid_argument("SynthConfig: amplitude must satisfy 0 <= amplitude < size/4");
  }
  if (!(cfg.nuisance_radius >= 0.0 && cfg.nuisance_radius < cfg.size / 4.0)) {
    throw std::invalid_argument("SynthConfig: patch radius must satisfy 0 <= radius < size/4");
  }
  if (cfg.nuisance_count < 0) throw std::invalid_argument("SynthConfig: negative nuisance count");
  if (cfg.noise_level < 0.0) throw std::invalid_argument("SynthConfig: negative noise level");
}

SynthPair generate_pair(const SynthConfig& cfg) {
  validate_synth_config(cfg);
  const int n = cfg.size;
  const size_t plane = static_cast<size_t>(n) * n;

  SynthPair pair;
  pair.seed = cfg.seed;

  // base texture: blurred seeded noise rescaled to a mid-intensity band
  Rng tex_rng(Rng::derive(cfg.seed, kTexture));
  std::vector<double> tex(plane);
  for (double& v : tex) v = tex_rng.uniform();
  tex = gaussian_blur(n, n, tex, cfg.texture_sigma);
  minmax_rescale(tex, 0.15, 0.65);

  // bright annulus, geometry jittered per pair
  Rng geom_rng(Rng::derive(cfg.seed, kGeom));
  const double cx = n / 2.0 + geom_rng.uniform(-n / 12.0, n / 12.0);
  const double cy = n / 2.0 + geom_rng.uniform(-n / 12.0, n / 12.0);
  const double r_out = n / 3.0 * geom_rng.uniform(0.9, 1.1);
  const double r_in = r_out - n / 8.0;
  pair.mask_source = Mask(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double r = std::hypot(x - cx, y - cy);
      const double band = smoothstep(r_in - 1.0, r_in + 0.5, r) *
                          (1.0 - smoothstep(r_out - 0.5, r_out + 1.0, r));
      tex[static_cast<size_t>(y) * n + x] =
          std::clamp(tex[static_cast<size_t>(y) * n + x] + 0.3 * band, 0.0, 1.0);
      if (r >= r_in && r <= r_out) pair.mask_source.set(x, y, true);
    }
  }
  pair.source = Image::from_data(n, n, std::move(tex));

  // ground-truth displacement
  pair.gt = DisplacementField(n, n);
  if (cfg.amplitude > 0.0) {
    if (cfg.radial_motion) {
      const double r_mid = (r_in + r_out) / 2.0;
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          const size_t i = static_cast<size_t>(y) * n + x;
          const double rx = x - cx, ry = y - cy;
          const double r = std::hypot(rx, ry);
          if (r < 1e-9) continue;
          // outward sampling offsets contract the pattern toward the center
          const double g = std::exp(-0.5 * std::pow((r - r_mid) / (n / 6.0), 2.0));
          pair.gt.dx[i] = cfg.amplitude * g * rx / r;
          pair.gt.dy[i] = cfg.amplitude * g * ry / r;
        }
      }
    } else {
      Rng field_rng(Rng::derive(cfg.seed, kField));
      std::vector<double> fx(plane), fy(plane);
      for (size_t i = 0; i < plane; ++i) fx[i] = field_rng.uniform(-1.0, 1.0);
      for (size_t i = 0; i < plane; ++i) fy[i] = field_rng.uniform(-1.0, 1.0);
      fx = gaussian_blur(n, n, fx, cfg.field_sigma);
      fy = gaussian_blur(n, n, fy, cfg.field_sigma);
      double max_mag = 0.0;
      for (size_t i = 0; i < plane; ++i) {
        max_mag = std::max(max_mag, std::hypot(fx[i], fy[i]));
      }
      const double scale = max_mag > 0.0 ? cfg.amplitude / max_mag : 0.0;
      for (size_t i = 0; i < plane; ++i) {
        pair.gt.dx[i] = scale * fx[i];
        pair.gt.dy[i] = scale * fy[i];
      }
    }
  }

  // target: warped source plus truncated Gaussian noise, then nuisance
  Image warped = warp_bilinear(pair.source, pair.gt);
  pair.mask_target = warp_nearest(pair.mask_source, pair.gt);
  if (cfg.noise_level > 0.0) {
    Rng noise_rng(Rng::derive(cfg.seed, kNoise));
    for (double& v : warped.data) {
      const double z = std::clamp(noise_rng.gaussian(), -4.0, 4.0);
      v = std::clamp(v + cfg.noise_level * z, 0.0, 1.0);
    }
  }
  pair.nuisance = Mask(n, n);
  if (cfg.nuisance_count > 0 && cfg.nuisance_radius > 0.0) {
    Rng nui_rng(Rng::derive(cfg.seed, kNuisance));
    const double r = cfg.nuisance_radius;
    for (int k = 0; k < cfg.nuisance_count; ++k) {
      const double px = nui_rng.uniform(r, n - 1.0 - r);
      const double py = nui_rng.uniform(r, n - 1.0 - r);
      const double fill = nui_rng.uniform();  // drawn for both kinds to keep streams aligned
      const int x0 = std::max(0, static_cast<int>(px - r) - 1);
      const int x1 = std::min(n - 1, static_cast<int>(px + r) + 1);
      const int y0 = std::max(0, static_cast<int>(py - r) - 1);
      const int y1 = std::min(n - 1, static_cast<int>(py + r) + 1);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          if (std::hypot(x - px, y - py) > r) continue;
          const size_t i = static_cast<size_t>(y) * n + x;
          warped.data[i] = cfg.nuisance_kind == NuisanceKind::NoiseFill ? nui_rng.uniform() : fill;
          pair.nuisance.m[i] = 1;
        }
      }
    }
  }
  pair.target = std::move(warped);
  return pair;
}

DatasetSplits generate_dataset(const SynthConfig& cfg, int count, double train_ratio,
                               double val_ratio) {
  if (count < 3) throw std::invalid_argument("generate_dataset: need at least 3 pairs");
  if (!(train_ratio > 0.0 && val_ratio > 0.0 && train_ratio + val_ratio < 1.0)) {
    throw std::invalid_argument("generate_dataset: degenerate split ratios");
  }
  const int n_train = static_cast<int>(count * train_ratio);
  const int n_val = static_cast<int>(count * val_ratio);
  const int n_test = count - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1) {
    throw std::invalid_argument("generate_dataset: degenerate split (an empty subset)");
  }
  DatasetSplits splits;
  for (int i = 0; i < count; ++i) {
    SynthConfig pc = cfg;
    pc.seed = cfg.seed + static_cast<uint64_t>(i);
    SynthPair p = generate_pair(pc);
    p.id = i;
    if (i < n_train) {
      splits.train.push_back(std::move(p));
    } else if (i < n_train + n_val) {
      splits.val.push_back(std::move(p));
    } else {
      splits.test.push_back(std::move(p));
    }
  }
  return splits;
}

}  // namespace adacs
