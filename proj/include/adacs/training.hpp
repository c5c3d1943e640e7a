#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "adacs/baselines.hpp"
#include "adacs/estimators.hpp"
#include "adacs/losses.hpp"
#include "adacs/synthetic.hpp"

namespace adacs {

// The training loop: warm-up phases, alternating optimization of the
// displacement and scoring estimators with stop-gradient hand-offs, EMA
// momentum bookkeeping and history capture.

enum class Method { None, AdaCS, AdaReg, AdaFrame, Nll, BetaNll };

std::optional<Method> parse_method(std::string_view name);
const char* method_name(Method m);
std::vector<Method> all_methods();

struct TrainConfig {
  int epochs = 300;        // N
  int warmup = 50;         // N_w
  double eta = 1e-3;
  double lambda = 0.01;
  double alpha = 0.1;
  double beta = 0.05;
  double gamma = 0.99;
  Method method = Method::AdaCS;
  int batch_size = 4;
  uint64_t seed = 0;
  EstimatorKind estimator = EstimatorKind::ConvNet;
  int base_width = 8;
  int depth = 2;
  double beta_nll = 0.5;  // exponent of the beta-NLL scale factor

  // Throws std::invalid_argument on invalid settings. For the adaptive
  // scoring method the schedule needs 2*warmup <= epochs, except the
  // degenerate warmup == epochs shape, which runs the plain objective
  // throughout.
  void validate() const;
};

struct PhaseFlags {
  bool disp = true;
  bool score = false;
};

// Three-branch warm-up schedule: epochs [0, N_w) train the displacement
// estimator alone, [N_w, 2*N_w) the scoring estimator alone, and the rest
// alternate both.
PhaseFlags phase_for_epoch(int epoch, int warmup);

struct EpochRecord {
  int epoch = 0;
  double loss_de = 0.0;
  double loss_se = 0.0;
  double mu = 0.0;
  double b = 0.0;
  double m = 0.0;
  double val_dice = 0.0;
  double mean_score = 0.0;  // in-memory extra; not part of the history CSV
};

using TrainHistory = std::vector<EpochRecord>;

// Seed-stream ids; parameter init, batch order and any future consumer draw
// from disjoint streams so the theta trajectory does not depend on which
// estimators exist.
enum : uint64_t {
  kSeedStreamDisp = 101,
  kSeedStreamScore = 102,
  kSeedStreamVariance = 103,
  kSeedStreamBatchOrder = 104,
};

// Mutable state owned by one training run.
struct TrainState {
  TrainConfig cfg;
  EstimatorSpec disp_spec;
  EstimatorSpec score_spec;  // only meaningful for Method::AdaCS
  EstimatorSpec var_spec;    // only meaningful for the NLL family
  ParamVector disp_params;
  ParamVector score_params;
  ParamVector var_params;
  OptimState disp_opt;
  OptimState score_opt;
  OptimState var_opt;
  MomentumState momentum;
  int epoch = 0;
  int batch_index = 0;  // within the epoch, for diagnostics
};

// Builds specs from the config and image dims and initializes parameters.
// Score/variance estimators are constructed only for the methods that use
// them.
TrainState make_train_state(const TrainConfig& cfg, int width, int height);

struct StepMetrics {
  double loss_de = 0.0;
  double loss_se = 0.0;
  double mu = 0.0;
  double b = 0.0;
  double m = 0.0;
  double mean_score = 0.0;
  bool disp_stepped = false;
  bool score_stepped = false;
};

// One Algorithm-1 iteration on a mini-batch: theta step on the adaptive
// objective with the score stopped, then (when the score phase is active)
// a recomputed displacement, the EMA momentum update from this batch's mean
// residual and a phi step on the scoring objective with the displacement
// stopped. Non-adacs methods take their scheme's displacement step and, for
// the NLL family, a joint variance step. Throws TrainAbort on non-finite
// losses or gradients.
StepMetrics train_step(TrainState& state, const std::vector<const SynthPair*>& batch,
                       PhaseFlags flags);

struct TrainAbort : std::runtime_error {
  int epoch;
  int batch;
  TrainAbort(int e, int b, const std::string& what);
};

struct TrainResult {
  EstimatorSpec disp_spec;
  EstimatorSpec score_spec;
  ParamVector disp_params;            // final
  ParamVector score_params;           // final (empty unless method = adacs)
  std::vector<double> best_disp_params;  // best-validation-Dice snapshot
  int best_epoch = -1;
  double best_val_dice = 0.0;
  TrainHistory history;
};

// Called at the end of every epoch; lets the harness export score maps and
// report progress without the loop knowing about files.
using EpochHook = std::function<void(const TrainState&, const EpochRecord&)>;

// Deterministic given config and seed: fixed per-epoch batch order derived
// from the seed, one history record per epoch, best-val-Dice checkpoint
// retained. Validation Dice is NaN when the dataset has no masks.
TrainResult run_training(const TrainConfig& cfg, const std::vector<SynthPair>& train_pairs,
                         const std::vector<SynthPair>& val_pairs,
                         const EpochHook& hook = nullptr);

// Mean Dice of warp_nearest(mask_source, predicted field) against
// mask_target over the given pairs; NaN if no pair has masks.
double mean_mask_dice(const EstimatorSpec& spec, const ParamVector& params,
                      const std::vector<SynthPair>& pairs);

}  // namespace adacs
