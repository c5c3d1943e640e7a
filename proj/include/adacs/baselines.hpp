#pragma once

#include <vector>

#include "adacs/estimators.hpp"
#include "adacs/grids.hpp"
#include "adacs/losses.hpp"

namespace adacs {

// Comparison schemes: residual-statistics weighting (AdaReg, AdaFrame) and
// aleatoric-uncertainty objectives (NLL, beta-NLL) with a conv-net variance
// estimator. All plug into the same training loop as the scoring method.

struct AdaRegConfig {
  double c = 50.0;
};

struct AdaFrameConfig {
  double a0 = 0.1;
  double b0 = 10.0;
  double eps = 1e-8;
};

struct VarianceMap {
  int width = 0;
  int height = 0;
  std::vector<double> sigma2;  // strictly positive
};

// alpha(x) = exp(-c * rho(x) / sigma) with rho = |target - warped| and
// sigma = 1 / mean(rho). Values in (0, 1]. An all-zero residual makes sigma
// degenerate; the weight is then defined as 1 everywhere and a note is
// written to stderr.
std::vector<double> adareg_weight(const Image& target, const Image& warped,
                                  const AdaRegConfig& cfg);

// alpha(x) = 1 - sigmoid(a * rho(x) - b) with rho the mean/std-normalized
// absolute residual, a = a0 / (mu + eps), b = b0 * (1 - cos(pi * mu)).
// Values in (0, 1).
std::vector<double> adaframe_weight(const Image& target, const Image& warped,
                                    const AdaFrameConfig& cfg);

// sigma^2 = exp(raw head output) of the 2-channel (target, warped) conv net.
VarianceMap forward_variance(const ParamVector& params, const EstimatorSpec& spec,
                             const Image& tgt, const Image& warped, ForwardCache* cache = nullptr);

// NLL-family result; value may be negative. d_logvar is the adjoint of the
// log-variance (the raw estimator output).
struct VarianceLoss {
  double value = 0.0;
  std::vector<double> d_warped;
  std::vector<double> d_logvar;
};

// mean( r / sigma^2 + log sigma^2 ).
VarianceLoss loss_nll(const Image& target, const Image& warped, const VarianceMap& var);

// mean( stop(sigma^(2*beta)) * (r / sigma^2 + log sigma^2) ); the scale
// factor is a constant for differentiation.
VarianceLoss loss_beta_nll(const Image& target, const Image& warped, const VarianceMap& var,
                           double beta = 0.5);

// Full training objectives built on the weights above; the weight grids are
// recomputed from the current residuals and treated as constants.
// AdaReg places the weight inside the smoothness norm, AdaFrame on the data
// term.
DisplacementLoss loss_adareg(const Image& target, const Image& warped,
                             const DisplacementField& disp, double lambda,
                             const AdaRegConfig& cfg);
DisplacementLoss loss_adaframe(const Image& target, const Image& warped,
                               const DisplacementField& disp, double lambda,
                               const AdaFrameConfig& cfg);

}  // namespace adacs
