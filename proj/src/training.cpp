#include "adacs/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "adacs/field_ops.hpp"
#include "adacs/metrics.hpp"
#include "adacs/rng.hpp"

namespace adacs {

std::optional<Method> parse_method(std::string_view name) {
  if (name == "none") return Method::None;
  if (name == "adacs") return Method::AdaCS;
  if (name == "adareg") return Method::AdaReg;
  if (name == "adaframe") return Method::AdaFrame;
  if (name == "nll") return Method::Nll;
  if (name == "beta-nll") return Method::BetaNll;
  return std::nullopt;
}

const char* method_name(Method m) {
  switch (m) {
    case Method::None: return "none";
    case Method::AdaCS: return "adacs";
    case Method::AdaReg: return "adareg";
    case Method::AdaFrame: return "adaframe";
    case Method::Nll: return "nll";
    case Method::BetaNll: return "beta-nll";
  }
  return "?";
}

std::vector<Method> all_methods() {
  return {Method::None, Method::AdaCS, Method::AdaReg,
          Method::AdaFrame, Method::Nll, Method::BetaNll};
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (warmup < 0) throw std::invalid_argument("TrainConfig: warmup must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch size must be >= 1");
  if (!(eta > 0.0)) throw std::invalid_argument("TrainConfig: eta must be positive");
  if (lambda < 0.0 || alpha < 0.0 || beta < 0.0 || beta_nll < 0.0) {
    throw std::invalid_argument("TrainConfig: loss weights must be nonnegative");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("TrainConfig: gamma must be in [0, 1)");
  }
  if (method == Method::AdaCS && !(2 * warmup <= epochs || warmup == epochs)) {
    throw std::invalid_argument(
        "TrainConfig: adacs needs 2*warmup <= epochs (or warmup == epochs for the "
        "score-free degenerate run)");
  }
}

PhaseFlags phase_for_epoch(int epoch, int warmup) {
  if (epoch < 0) throw std::invalid_argument("phase_for_epoch: negative epoch");
  if (epoch < warmup) return {true, false};
  if (epoch < 2 * warmup) return {false, true};
  return {true, true};
}

TrainAbort::TrainAbort(int e, int b, const std::string& what)
    : std::runtime_error("training aborted at epoch " + std::to_string(e) + ", batch " +
                         std::to_string(b) + ": " + what),
      epoch(e),
      batch(b) {}

TrainState make_train_state(const TrainConfig& cfg, int width, int height) {
  cfg.validate();
  TrainState st;
  st.cfg = cfg;
  st.momentum = MomentumState{0.0, cfg.gamma};

  st.disp_spec.kind = cfg.estimator;
  st.disp_spec.head = HeadKind::Displacement;
  st.disp_spec.in_channels = 2;
  st.disp_spec.base_width = cfg.base_width;
  st.disp_spec.depth = cfg.depth;
  st.disp_spec.width = width;
  st.disp_spec.height = height;
  st.disp_params = init_params(st.disp_spec, Rng::derive(cfg.seed, kSeedStreamDisp));
  st.disp_opt = make_optimizer(st.disp_params.values.size(), cfg.eta);

  if (cfg.method == Method::AdaCS) {
    st.score_spec = st.disp_spec;
    st.score_spec.head = HeadKind::Score;
    st.score_spec.in_channels = 1;
    st.score_params = init_params(st.score_spec, Rng::derive(cfg.seed, kSeedStreamScore));
    st.score_opt = make_optimizer(st.score_params.values.size(), cfg.eta);
  }
  if (cfg.method == Method::Nll || cfg.method == Method::BetaNll) {
    // the variance estimator is always the conv net, per its formulation
    st.var_spec = st.disp_spec;
    st.var_spec.kind = EstimatorKind::ConvNet;
    st.var_spec.head = HeadKind::LogVariance;
    st.var_spec.in_channels = 2;
    st.var_params = init_params(st.var_spec, Rng::derive(cfg.seed, kSeedStreamVariance));
    st.var_opt = make_optimizer(st.var_params.values.size(), cfg.eta);
  }
  return st;
}

namespace {

double grid_mean(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

void require_finite_loss(double value, const TrainState& st, const char* what) {
  if (!std::isfinite(value)) {
    throw TrainAbort(st.epoch, st.batch_index, std::string(what) + " is non-finite");
  }
}

Tensor field_adjoint(const std::vector<double>& ddx, const std::vector<double>& ddy, int w, int h,
                     double scale) {
  Tensor adj(2, h, w);
  for (size_t i = 0; i < ddx.size(); ++i) {
    adj.v[i] = ddx[i] * scale;
    adj.v[ddx.size() + i] = ddy[i] * scale;
  }
  return adj;
}

// theta step of the non-scoring methods (and the shared shape of the adacs
// disp branch): computes the scheme's displacement objective, backpropagates
// through the warp into the estimator and accumulates batch-mean gradients.
struct DispStepOut {
  double loss = 0.0;
  double mu = 0.0;
  double mean_score = std::numeric_limits<double>::quiet_NaN();
};

DispStepOut disp_branch(TrainState& st, const std::vector<const SynthPair*>& batch,
                        bool score_active) {
  const TrainConfig& cfg = st.cfg;
  const int w = st.disp_spec.width, h = st.disp_spec.height;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  DispStepOut out;
  double score_acc = 0.0;
  for (const SynthPair* p : batch) {
    ForwardCache cache;
    const DisplacementField field =
        forward_displacement(st.disp_params, st.disp_spec, p->source, p->target, &cache);
    const Image warped = warp_bilinear(p->source, field);
    out.mu += mean_residual(p->target, warped) * inv_b;

    DisplacementLoss loss;
    switch (cfg.method) {
      case Method::None:
        loss = loss_baseline(p->target, warped, field, cfg.lambda);
        break;
      case Method::AdaCS: {
        const ScoreMap score =
            score_active ? forward_score(st.score_params, st.score_spec, p->target)
                         : ScoreMap(w, h, 1.0);
        score_acc += grid_mean(score.s) * inv_b;
        loss = loss_de(p->target, warped, field, score, cfg.lambda);
        break;
      }
      case Method::AdaReg:
        loss = loss_adareg(p->target, warped, field, cfg.lambda, AdaRegConfig{});
        break;
      case Method::AdaFrame:
        loss = loss_adaframe(p->target, warped, field, cfg.lambda, AdaFrameConfig{});
        break;
      case Method::Nll:
      case Method::BetaNll: {
        ForwardCache vcache;
        const VarianceMap var =
            forward_variance(st.var_params, st.var_spec, p->target, warped, &vcache);
        const VarianceLoss vloss =
            cfg.method == Method::Nll ? loss_nll(p->target, warped, var)
                                      : loss_beta_nll(p->target, warped, var, cfg.beta_nll);
        require_finite_loss(vloss.value, st, "variance objective");
        // theta sees only the data term; the variance estimator's inputs are
        // constants
        std::vector<double> ddx(field.size(), 0.0), ddy(field.size(), 0.0);
        warp_bilinear_backward(p->source, field, vloss.d_warped, ddx, ddy);
        backward(st.disp_params, st.disp_spec, cache, field_adjoint(ddx, ddy, w, h, inv_b));
        Tensor vadj(1, h, w);
        for (size_t i = 0; i < vadj.v.size(); ++i) vadj.v[i] = vloss.d_logvar[i] * inv_b;
        backward(st.var_params, st.var_spec, vcache, vadj);
        out.loss += vloss.value * inv_b;
        continue;
      }
    }
    require_finite_loss(loss.value, st, "displacement objective");
    std::vector<double> ddx = std::move(loss.d_dx);
    std::vector<double> ddy = std::move(loss.d_dy);
    warp_bilinear_backward(p->source, field, loss.d_warped, ddx, ddy);
    backward(st.disp_params, st.disp_spec, cache, field_adjoint(ddx, ddy, w, h, inv_b));
    out.loss += loss.value * inv_b;
  }
  if (cfg.method == Method::AdaCS && score_active) out.mean_score = score_acc;
  return out;
}

}  // namespace

StepMetrics train_step(TrainState& st, const std::vector<const SynthPair*>& batch,
                       PhaseFlags flags) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  const TrainConfig& cfg = st.cfg;
  const int w = st.disp_spec.width, h = st.disp_spec.height;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();

  StepMetrics metrics;
  metrics.loss_de = nan;
  metrics.loss_se = nan;
  metrics.mu = nan;
  metrics.b = nan;
  metrics.mean_score = nan;

  if (cfg.method != Method::AdaCS) {
    // no warm-up schedule outside Algorithm 1; every batch is a theta step
    if (flags.disp) {
      try {
        const DispStepOut out = disp_branch(st, batch, false);
        optimizer_step(st.disp_params, st.disp_opt);
        if (cfg.method == Method::Nll || cfg.method == Method::BetaNll) {
          optimizer_step(st.var_params, st.var_opt);
        }
        metrics.loss_de = out.loss;
        metrics.mu = out.mu;
        metrics.b = cosine_activation(out.mu);
      } catch (const std::runtime_error& e) {
        if (dynamic_cast<const TrainAbort*>(&e)) throw;
        throw TrainAbort(st.epoch, st.batch_index, e.what());
      }
      metrics.disp_stepped = true;
    }
    metrics.m = st.momentum.m;
    return metrics;
  }

  try {
    if (flags.disp) {
      const DispStepOut out = disp_branch(st, batch, flags.score);
      optimizer_step(st.disp_params, st.disp_opt);
      metrics.loss_de = out.loss;
      metrics.mu = out.mu;
      metrics.b = cosine_activation(out.mu);
      metrics.disp_stepped = true;
    }
    if (flags.score) {
      // residuals under the (possibly just updated) displacement, stopped
      std::vector<Image> warped;
      warped.reserve(batch.size());
      double mu = 0.0;
      for (const SynthPair* p : batch) {
        const DisplacementField field =
            forward_displacement(st.disp_params, st.disp_spec, p->source, p->target);
        warped.push_back(warp_bilinear(p->source, field));
        mu += mean_residual(p->target, warped.back()) * inv_b;
      }
      const double b = cosine_activation(mu);
      st.momentum = ema_update(st.momentum, b);

      const ScoringWeights weights{cfg.alpha, cfg.beta, cfg.lambda};
      double loss_acc = 0.0, score_acc = 0.0;
      for (size_t i = 0; i < batch.size(); ++i) {
        ForwardCache cache;
        const ScoreMap score =
            forward_score(st.score_params, st.score_spec, batch[i]->target, &cache);
        const ScoreLoss loss = loss_se(batch[i]->target, warped[i], score, weights,
                                       st.momentum.m);
        require_finite_loss(loss.value, st, "scoring objective");
        Tensor adj(1, h, w);
        for (size_t j = 0; j < adj.v.size(); ++j) adj.v[j] = loss.d_score[j] * inv_b;
        backward(st.score_params, st.score_spec, cache, adj);
        loss_acc += loss.value * inv_b;
        score_acc += grid_mean(score.s) * inv_b;
      }
      optimizer_step(st.score_params, st.score_opt);
      metrics.loss_se = loss_acc;
      metrics.mu = mu;
      metrics.b = b;
      metrics.mean_score = score_acc;
      metrics.score_stepped = true;
    }
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const TrainAbort*>(&e)) throw;
    throw TrainAbort(st.epoch, st.batch_index, e.what());
  }
  metrics.m = st.momentum.m;
  return metrics;
}

double mean_mask_dice(const EstimatorSpec& spec, const ParamVector& params,
                      const std::vector<SynthPair>& pairs) {
  double acc = 0.0;
  size_t n = 0;
  for (const SynthPair& p : pairs) {
    if (p.mask_source.size() == 0 || p.mask_target.size() == 0) continue;
    if (p.mask_source.empty() && p.mask_target.empty()) continue;
    const DisplacementField field = forward_displacement(params, spec, p.source, p.target);
    acc += dice(warp_nearest(p.mask_source, field), p.mask_target);
    ++n;
  }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return acc / static_cast<double>(n);
}

TrainResult run_training(const TrainConfig& cfg, const std::vector<SynthPair>& train_pairs,
                         const std::vector<SynthPair>& val_pairs, const EpochHook& hook) {
  cfg.validate();
  if (train_pairs.empty()) throw std::invalid_argument("run_training: empty training set");
  const int w = train_pairs[0].source.width, h = train_pairs[0].source.height;
  for (const SynthPair& p : train_pairs) {
    require_same_shape(w, h, p.source.width, p.source.height, "run_training");
  }
  for (const SynthPair& p : val_pairs) {
    require_same_shape(w, h, p.source.width, p.source.height, "run_training");
  }

  TrainState st = make_train_state(cfg, w, h);
  Rng order_rng(Rng::derive(cfg.seed, kSeedStreamBatchOrder));
  std::vector<size_t> order(train_pairs.size());
  std::iota(order.begin(), order.end(), size_t{0});

  TrainResult res;
  res.disp_spec = st.disp_spec;
  res.score_spec = st.score_spec;
  res.best_val_dice = -std::numeric_limits<double>::infinity();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    st.epoch = epoch;
    const PhaseFlags flags =
        cfg.method == Method::AdaCS ? phase_for_epoch(epoch, cfg.warmup) : PhaseFlags{true, false};

    // Fisher-Yates from the dedicated stream; identical order for every method
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[order_rng.below(i)]);
    }

    double de_acc = 0.0, se_acc = 0.0, mu_acc = 0.0, b_acc = 0.0, score_acc = 0.0;
    int de_n = 0, se_n = 0, mu_n = 0, score_n = 0;
    int batch_index = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      st.batch_index = batch_index++;
      std::vector<const SynthPair*> batch;
      for (size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) {
        batch.push_back(&train_pairs[order[i]]);
      }
      const StepMetrics m = train_step(st, batch, flags);
      if (m.disp_stepped) {
        de_acc += m.loss_de;
        ++de_n;
      }
      if (m.score_stepped) {
        se_acc += m.loss_se;
        ++se_n;
      }
      if (std::isfinite(m.mu)) {
        mu_acc += m.mu;
        b_acc += m.b;
        ++mu_n;
      }
      if (std::isfinite(m.mean_score)) {
        score_acc += m.mean_score;
        ++score_n;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss_de = de_n ? de_acc / de_n : nan;
    rec.loss_se = se_n ? se_acc / se_n : nan;
    rec.mu = mu_n ? mu_acc / mu_n : nan;
    rec.b = mu_n ? b_acc / mu_n : nan;
    rec.m = st.momentum.m;
    rec.mean_score = score_n ? score_acc / score_n : nan;
    rec.val_dice = mean_mask_dice(st.disp_spec, st.disp_params, val_pairs);
    if (std::isfinite(rec.val_dice) && rec.val_dice > res.best_val_dice) {
      res.best_val_dice = rec.val_dice;
      res.best_epoch = epoch;
      res.best_disp_params = st.disp_params.values;
    }
    res.history.push_back(rec);
    if (hook) hook(st, rec);
  }

  if (res.best_epoch < 0) {
    res.best_disp_params = st.disp_params.values;
    res.best_val_dice = nan;
  }
  res.disp_params = std::move(st.disp_params);
  res.score_params = std::move(st.score_params);
  return res;
}

}  // namespace adacs
