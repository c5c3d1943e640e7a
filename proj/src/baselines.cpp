#include "adacs/baselines.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "adacs/field_ops.hpp"

namespace adacs {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<double> abs_residual(const Image& target, const Image& warped, const char* what) {
  require_same_shape(target, warped, what);
  std::vector<double> rho(target.size());
  for (size_t i = 0; i < rho.size(); ++i) {
    rho[i] = std::fabs(target.data[i] - warped.data[i]);
  }
  return rho;
}

}  // namespace

std::vector<double> adareg_weight(const Image& target, const Image& warped,
                                  const AdaRegConfig& cfg) {
  if (!(cfg.c > 0.0)) throw std::invalid_argument("adareg_weight: c must be positive");
  std::vector<double> rho = abs_residual(target, warped, "adareg_weight");
  double mean_rho = 0.0;
  for (double v : rho) mean_rho += v;
  mean_rho /= static_cast<double>(rho.size());
  if (mean_rho == 0.0) {
    std::fprintf(stderr, "adareg_weight: all-zero residual, sigma degenerate; weight = 1\n");
    return std::vector<double>(rho.size(), 1.0);
  }
  // sigma = 1 / mean(rho), so c * rho / sigma = c * rho * mean(rho)
  for (double& v : rho) v = std::exp(-cfg.c * v * mean_rho);
  return rho;
}

std::vector<double> adaframe_weight(const Image& target, const Image& warped,
                                    const AdaFrameConfig& cfg) {
  std::vector<double> delta = abs_residual(target, warped, "adaframe_weight");
  const double n = static_cast<double>(delta.size());
  double mu = 0.0;
  for (double v : delta) mu += v;
  mu /= n;
  double var = 0.0;
  for (double v : delta) var += (v - mu) * (v - mu);
  var /= n;
  const double denom = std::sqrt(var + cfg.eps);
  const double a = cfg.a0 / (mu + cfg.eps);
  const double b = cfg.b0 * (1.0 - std::cos(kPi * mu));
  for (double& v : delta) {
    const double rho = (v - mu) / denom;
    v = 1.0 - sigmoid(a * rho - b);
  }
  return delta;
}

VarianceMap forward_variance(const ParamVector& params, const EstimatorSpec& spec,
                             const Image& tgt, const Image& warped, ForwardCache* cache) {
  Tensor raw = forward_logvar(params, spec, tgt, warped, cache);
  VarianceMap m;
  m.width = tgt.width;
  m.height = tgt.height;
  m.sigma2.resize(raw.v.size());
  for (size_t i = 0; i < raw.v.size(); ++i) m.sigma2[i] = std::exp(raw.v[i]);
  return m;
}

VarianceLoss loss_nll(const Image& target, const Image& warped, const VarianceMap& var) {
  require_same_shape(target, warped, "loss_nll");
  require_same_shape(target, var, "loss_nll");
  const double inv_n = 1.0 / static_cast<double>(target.size());
  VarianceLoss out;
  out.d_warped.assign(target.size(), 0.0);
  out.d_logvar.assign(target.size(), 0.0);
  double acc = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    const double s2 = var.sigma2[i];
    const double d = warped.data[i] - target.data[i];
    const double r = d * d;
    acc += r / s2 + std::log(s2);
    out.d_warped[i] = 2.0 * d / s2 * inv_n;
    out.d_logvar[i] = (1.0 - r / s2) * inv_n;
  }
  out.value = acc * inv_n;
  return out;
}

VarianceLoss loss_beta_nll(const Image& target, const Image& warped, const VarianceMap& var,
                           double beta) {
  require_same_shape(target, warped, "loss_beta_nll");
  require_same_shape(target, var, "loss_beta_nll");
  const double inv_n = 1.0 / static_cast<double>(target.size());
  VarianceLoss out;
  out.d_warped.assign(target.size(), 0.0);
  out.d_logvar.assign(target.size(), 0.0);
  double acc = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    const double s2 = var.sigma2[i];
    const double scale = std::pow(s2, beta);  // stop-gradient factor
    const double d = warped.data[i] - target.data[i];
    const double r = d * d;
    acc += scale * (r / s2 + std::log(s2));
    out.d_warped[i] = scale * 2.0 * d / s2 * inv_n;
    out.d_logvar[i] = scale * (1.0 - r / s2) * inv_n;
  }
  out.value = acc * inv_n;
  return out;
}

namespace {

// Shared shell: data term with optional per-pixel weight, smoothness with
// optional per-pixel weight (applied inside the squared norm).
DisplacementLoss weighted_objective(const Image& target, const Image& warped,
                                    const DisplacementField& disp, double lambda,
                                    const std::vector<double>* data_w,
                                    const std::vector<double>* smooth_w, const char* what) {
  require_same_shape(target, warped, what);
  require_same_shape(target, disp, what);
  const double inv_n = 1.0 / static_cast<double>(target.size());
  DisplacementLoss out;
  out.d_warped.assign(target.size(), 0.0);
  out.d_dx.assign(target.size(), 0.0);
  out.d_dy.assign(target.size(), 0.0);
  double acc = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    const double wv = data_w ? (*data_w)[i] : 1.0;
    const double d = warped.data[i] - target.data[i];
    acc += wv * d * d;
    out.d_warped[i] = 2.0 * wv * d * inv_n;
  }
  double smooth = 0.0;
  const SpatialGradient gx = spatial_gradient(disp.width, disp.height, disp.dx);
  const SpatialGradient gy = spatial_gradient(disp.width, disp.height, disp.dy);
  std::vector<double> ax(disp.size()), ay(disp.size());
  const double scale = 2.0 * lambda * inv_n;
  for (int pass = 0; pass < 2; ++pass) {
    const SpatialGradient& g = pass == 0 ? gx : gy;
    for (size_t i = 0; i < disp.size(); ++i) {
      const double w2 = smooth_w ? (*smooth_w)[i] * (*smooth_w)[i] : 1.0;
      smooth += w2 * (g.gx[i] * g.gx[i] + g.gy[i] * g.gy[i]);
      ax[i] = scale * w2 * g.gx[i];
      ay[i] = scale * w2 * g.gy[i];
    }
    add_gradient_adjoint(disp.width, disp.height, ax, ay, pass == 0 ? out.d_dx : out.d_dy);
  }
  out.value = (acc + lambda * smooth) * inv_n;
  return out;
}

}  // namespace

DisplacementLoss loss_adareg(const Image& target, const Image& warped,
                             const DisplacementField& disp, double lambda,
                             const AdaRegConfig& cfg) {
  const std::vector<double> w = adareg_weight(target, warped, cfg);
  return weighted_objective(target, warped, disp, lambda, nullptr, &w, "loss_adareg");
}

DisplacementLoss loss_adaframe(const Image& target, const Image& warped,
                               const DisplacementField& disp, double lambda,
                               const AdaFrameConfig& cfg) {
  const std::vector<double> w = adaframe_weight(target, warped, cfg);
  return weighted_objective(target, warped, disp, lambda, &w, nullptr, "loss_adaframe");
}

}  // namespace adacs
