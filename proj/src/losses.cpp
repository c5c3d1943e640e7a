#include "adacs/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adacs {

namespace {

constexpr double kHalfPi = 1.5707963267948966192313216916398;

// Adds lambda * mean over both channels/directions of squared forward
// differences; accumulates the adjoint into d_dx / d_dy.
double smoothness_term(const DisplacementField& disp, double lambda, std::vector<double>& d_dx,
                       std::vector<double>& d_dy) {
  const double inv_n = 1.0 / static_cast<double>(disp.size());
  const SpatialGradient gx = spatial_gradient(disp.width, disp.height, disp.dx);
  const SpatialGradient gy = spatial_gradient(disp.width, disp.height, disp.dy);
  double acc = 0.0;
  for (size_t i = 0; i < disp.size(); ++i) {
    acc += gx.gx[i] * gx.gx[i] + gx.gy[i] * gx.gy[i] + gy.gx[i] * gy.gx[i] + gy.gy[i] * gy.gy[i];
  }
  const double scale = 2.0 * lambda * inv_n;
  std::vector<double> ax(disp.size()), ay(disp.size());
  for (size_t i = 0; i < disp.size(); ++i) {
    ax[i] = scale * gx.gx[i];
    ay[i] = scale * gx.gy[i];
  }
  add_gradient_adjoint(disp.width, disp.height, ax, ay, d_dx);
  for (size_t i = 0; i < disp.size(); ++i) {
    ax[i] = scale * gy.gx[i];
    ay[i] = scale * gy.gy[i];
  }
  add_gradient_adjoint(disp.width, disp.height, ax, ay, d_dy);
  return lambda * acc * inv_n;
}

DisplacementLoss weighted_data_loss(const Image& target, const Image& warped,
                                    const DisplacementField& disp, const double* score,
                                    double lambda, const char* what) {
  require_same_shape(target, warped, what);
  require_same_shape(target, disp, what);
  const double inv_n = 1.0 / static_cast<double>(target.size());
  DisplacementLoss out;
  out.d_warped.assign(target.size(), 0.0);
  out.d_dx.assign(target.size(), 0.0);
  out.d_dy.assign(target.size(), 0.0);
  double acc = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    const double s = score ? score[i] : 1.0;
    const double d = warped.data[i] - target.data[i];
    acc += s * d * d;
    out.d_warped[i] = 2.0 * s * d * inv_n;
  }
  out.value = acc * inv_n + smoothness_term(disp, lambda, out.d_dx, out.d_dy);
  return out;
}

}  // namespace

DisplacementLoss loss_baseline(const Image& target, const Image& warped,
                               const DisplacementField& disp, double lambda) {
  return weighted_data_loss(target, warped, disp, nullptr, lambda, "loss_baseline");
}

DisplacementLoss loss_de(const Image& target, const Image& warped, const DisplacementField& disp,
                         const ScoreMap& score_stopped, double lambda) {
  require_same_shape(target, score_stopped, "loss_de");
  require_valid_score(score_stopped, "loss_de");
  return weighted_data_loss(target, warped, disp, score_stopped.s.data(), lambda, "loss_de");
}

ScoreLoss loss_scs(const Image& target, const Image& warped_stopped, const ScoreMap& score) {
  require_same_shape(target, warped_stopped, "loss_scs");
  require_same_shape(target, score, "loss_scs");
  const double inv_n = 1.0 / static_cast<double>(target.size());
  ScoreLoss out;
  out.d_score.assign(target.size(), 0.0);
  double acc = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    const double d = target.data[i] - warped_stopped.data[i];
    const double r = d * d;
    acc += score.s[i] * r;
    out.d_score[i] = r * inv_n;
  }
  out.value = acc * inv_n;
  return out;
}

ScoreLoss loss_reg(const ScoreMap& score) {
  const double inv_n = 1.0 / static_cast<double>(score.size());
  ScoreLoss out;
  out.d_score.assign(score.size(), 0.0);
  double acc = 0.0;
  for (size_t i = 0; i < score.size(); ++i) {
    const double d = 1.0 - score.s[i];
    acc += d * d;
    out.d_score[i] = -2.0 * d * inv_n;
  }
  out.value = acc * inv_n;
  return out;
}

double mean_residual(const Image& target, const Image& warped) {
  require_same_shape(target, warped, "mean_residual");
  double acc = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    const double d = target.data[i] - warped.data[i];
    acc += d * d;
  }
  // accumulation rounding must not push the mean past the [0,1] contract
  return std::min(1.0, acc / static_cast<double>(target.size()));
}

double cosine_activation(double mu) {
  if (!(mu >= 0.0 && mu <= 1.0)) {
    throw std::domain_error("cosine_activation: mu outside [0,1]");
  }
  return std::cos(kHalfPi * mu);
}

MomentumState ema_update(MomentumState state, double b) {
  if (!(b >= 0.0 && b <= 1.0)) {
    throw std::domain_error("ema_update: b outside [0,1]");
  }
  state.m = state.gamma * state.m + (1.0 - state.gamma) * b;
  return state;
}

ScoreLoss loss_tv(const ScoreMap& score, double m) {
  if (!(m >= 0.0 && m <= 1.0)) {
    throw std::domain_error("loss_tv: momentum weight outside [0,1]");
  }
  const double inv_n = 1.0 / static_cast<double>(score.size());
  const SpatialGradient g = spatial_gradient(score.width, score.height, score.s);
  ScoreLoss out;
  out.d_score.assign(score.size(), 0.0);
  double acc = 0.0;
  for (size_t i = 0; i < score.size(); ++i) {
    acc += g.gx[i] * g.gx[i] + g.gy[i] * g.gy[i];
  }
  out.value = m * acc * inv_n;
  const double scale = 2.0 * m * inv_n;
  std::vector<double> ax(score.size()), ay(score.size());
  for (size_t i = 0; i < score.size(); ++i) {
    ax[i] = scale * g.gx[i];
    ay[i] = scale * g.gy[i];
  }
  add_gradient_adjoint(score.width, score.height, ax, ay, out.d_score);
  return out;
}

ScoreLoss loss_se(const Image& target, const Image& warped_stopped, const ScoreMap& score,
                  const ScoringWeights& weights, double m) {
  ScoreLoss scs = loss_scs(target, warped_stopped, score);
  const ScoreLoss reg = loss_reg(score);
  const ScoreLoss tv = loss_tv(score, m);
  scs.value += weights.alpha * reg.value + weights.beta * tv.value;
  for (size_t i = 0; i < scs.d_score.size(); ++i) {
    scs.d_score[i] += weights.alpha * reg.d_score[i] + weights.beta * tv.d_score[i];
  }
  return scs;
}

}  // namespace adacs
