#pragma once

#include <cstdint>
#include <vector>

#include "adacs/grids.hpp"

namespace adacs {

// Deterministic generator of registration pairs with known ground-truth
// displacement, an annulus "myocardium" mask, and injected non-correspondence
// patches in the target.

enum class NuisanceKind { NoiseFill, ConstantFill };

struct SynthConfig {
  int size = 64;
  double texture_sigma = 2.0;     // blur of the base texture, px
  double amplitude = 6.0;         // max ground-truth displacement, px
  double field_sigma = 8.0;       // blur of the random deformation, px
  int nuisance_count = 2;
  double nuisance_radius = 6.0;   // disk radius, px
  NuisanceKind nuisance_kind = NuisanceKind::NoiseFill;
  double noise_level = 0.02;      // additive intensity noise std
  bool radial_motion = false;     // contraction preset for qualitative figures
  uint64_t seed = 0;
};

struct SynthPair {
  int id = 0;
  uint64_t seed = 0;
  Image source;
  Image target;
  DisplacementField gt;  // target coords -> source sample offsets, I_t(x) ~ I_s(x + u(x))
  Mask mask_source;
  Mask mask_target;      // warp of mask_source under gt, before nuisance injection
  Mask nuisance;         // true where target correspondence was destroyed
};

// Throws std::invalid_argument on configs violating amplitude < size/4 or
// patch radius < size/4.
void validate_synth_config(const SynthConfig& cfg);

SynthPair generate_pair(const SynthConfig& cfg);

struct DatasetSplits {
  std::vector<SynthPair> train;
  std::vector<SynthPair> val;
  std::vector<SynthPair> test;
};

// Pair i uses seed cfg.seed + i; split sizes are floor(count * ratio) for
// train and val, remainder test. Every split must be nonempty.
DatasetSplits generate_dataset(const SynthConfig& cfg, int count, double train_ratio,
                               double val_ratio);

// Separable Gaussian blur, kernel truncated at radius ceil(3*sigma),
// replicate boundary. sigma <= 0 is the identity.
std::vector<double> gaussian_blur(int width, int height, const std::vector<double>& grid,
                                  double sigma);

}  // namespace adacs
