#pragma once

#include <cstdint>
#include <vector>

#include "adacs/grids.hpp"

namespace adacs {

// Displacement estimator f_theta and scoring estimator g_phi in two
// interchangeable parameterizations, with a hand-written reverse-mode pass.
//
// direct-field: the parameters are the output grid itself (per-pair mode;
//   image content is ignored). Displacement params are the field, score
//   params are per-pixel logits.
// conv-net: a small encoder-decoder over the stacked input channels.
//   3x3 convolutions with replicate padding, leaky-ReLU (slope 0.1),
//   2x2 average-pool downsampling, nearest-neighbor 2x upsampling,
//   channel-concatenation skips, 1x1 output convolution.

enum class EstimatorKind { DirectField, ConvNet };

enum class HeadKind {
  Displacement,  // 2 channels, linear
  Score,         // 1 channel, sigmoid
  LogVariance,   // 1 channel, linear; exp() applied by forward_variance
};

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::ConvNet;
  HeadKind head = HeadKind::Displacement;
  int in_channels = 2;
  int base_width = 8;
  int depth = 2;  // number of 2x down/up levels; image dims must divide 2^depth
  int width = 0;  // image dims the estimator is sized for
  int height = 0;

  int out_channels() const { return head == HeadKind::Displacement ? 2 : 1; }
};

// Throws std::invalid_argument when the spec is internally inconsistent
// (conv-net dims not divisible by 2^depth, nonpositive sizes, ...).
void validate_spec(const EstimatorSpec& spec);

size_t param_count(const EstimatorSpec& spec);

// Flat parameter store with a parallel gradient accumulator. `version` is
// bumped by optimizer steps and guards stale forward caches.
struct ParamVector {
  std::vector<double> values;
  std::vector<double> grads;
  uint64_t version = 0;

  void zero_grads() { std::fill(grads.begin(), grads.end(), 0.0); }
};

// Deterministic init: conv weights uniform in +-sqrt(1/fan_in), biases zero,
// direct-field params zero.
ParamVector init_params(const EstimatorSpec& spec, uint64_t seed);

// Channel-major activation block, v[(c*h + y)*w + x].
struct Tensor {
  int ch = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int c, int hh, int ww) : ch(c), h(hh), w(ww), v(static_cast<size_t>(c) * hh * ww, 0.0) {}
  double* channel(int c) { return v.data() + static_cast<size_t>(c) * h * w; }
  const double* channel(int c) const { return v.data() + static_cast<size_t>(c) * h * w; }
  size_t plane() const { return static_cast<size_t>(h) * w; }
};

// Intermediate activations saved by a forward pass for the matching backward.
struct ForwardCache {
  EstimatorSpec spec;
  uint64_t params_version = 0;
  bool valid = false;
  Tensor input;
  std::vector<Tensor> enc_in;  // conv input per encoder level
  std::vector<Tensor> enc_z;   // pre-activation
  std::vector<Tensor> enc_a;   // post-activation
  std::vector<Tensor> dec_in;  // concatenated skip inputs per decoder level
  std::vector<Tensor> dec_z;
  std::vector<Tensor> dec_a;
  Tensor head_out;  // post-nonlinearity head output (sigmoid for score head)
};

// u_hat = f_theta(I_t, I_s); channel order is (target, source). Pass a cache
// to enable backward() afterwards.
DisplacementField forward_displacement(const ParamVector& params, const EstimatorSpec& spec,
                                       const Image& src, const Image& tgt,
                                       ForwardCache* cache = nullptr);

// S_hat = g_phi(I_t); sigmoid-bounded, strictly inside (0,1).
ScoreMap forward_score(const ParamVector& params, const EstimatorSpec& spec, const Image& tgt,
                       ForwardCache* cache = nullptr);

// Raw (pre-exp) log-variance head used by the aleatoric baselines; input is
// the 2-channel (target, warped) stack.
Tensor forward_logvar(const ParamVector& params, const EstimatorSpec& spec, const Image& tgt,
                      const Image& warped, ForwardCache* cache = nullptr);

// Accumulates d(output . adjoint)/d(params) into params.grads. The adjoint is
// w.r.t. the estimator output: field channels, score values (post-sigmoid),
// or raw log-variance. Throws std::logic_error when the cache does not match
// the current params version (stale cache).
void backward(ParamVector& params, const EstimatorSpec& spec, const ForwardCache& cache,
              const Tensor& output_adjoint);

// Adaptive-moment optimizer state (bias-corrected, decay 0.9/0.999, eps 1e-8).
struct OptimState {
  int64_t step = 0;
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
};

OptimState make_optimizer(size_t n_params, double eta);

// One adaptive-moment step from the accumulated gradients; zeroes the
// gradients and bumps the parameter version. Throws std::runtime_error on a
// non-finite gradient.
void optimizer_step(ParamVector& params, OptimState& opt);

}  // namespace adacs
