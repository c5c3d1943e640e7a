#pragma once

#include <string>
#include <vector>

#include "adacs/config.hpp"
#include "adacs/gradcheck.hpp"
#include "adacs/metrics.hpp"
#include "adacs/synthetic.hpp"
#include "adacs/training.hpp"

namespace adacs {

// Experiment wiring behind the CLI: dataset persistence, training runs,
// evaluation CSVs, the multi-method comparison and the sequential
// hyperparameter search. Exit codes: 0 success, 1 config error, 2 runtime
// abort, 3 gradcheck failure.

struct Dataset {
  std::vector<SynthPair> train;
  std::vector<SynthPair> val;
  std::vector<SynthPair> test;

  const std::vector<SynthPair>& split(const std::string& name) const;
};

// Reads the manifest under cfg.data_dir, or generates the synthetic dataset.
Dataset load_or_generate(const ExperimentConfig& cfg);

// Writes a dataset as binary grids plus manifest.txt under `dir`.
void write_dataset(const Dataset& ds, const std::string& dir);
Dataset read_dataset(const std::string& dir);

struct PairMetrics {
  int id = 0;
  double dsc = 0.0;
  double hd = 0.0;
  double asd = 0.0;
  double epe = 0.0;
};

// Warps the source mask with the estimated field and scores it against the
// target mask; endpoint error is taken over the full image when ground truth
// is available (NaN otherwise).
std::vector<PairMetrics> evaluate_pairs(const EstimatorSpec& spec, const ParamVector& params,
                                        const std::vector<SynthPair>& pairs);

struct MethodEval {
  Method method = Method::None;
  // per-(seed, pair), seed-major; dice order is shared across methods so the
  // paired test lines up
  std::vector<double> dsc, hd, asd, epe;
};

struct ComparisonReport {
  std::vector<MethodEval> methods;
  size_t reference = 0;                   // index into methods
  std::vector<TTestResult> vs_reference;  // aligned with methods
};

// Trains every method per seed on the same dataset and evaluates the shared
// test split. The reference defaults to the best mean-Dice method that is
// not adacs. Honors ADACS_WORKERS for parallel cells.
ComparisonReport compare_methods(const ExperimentConfig& cfg, const std::vector<Method>& methods,
                                 const std::vector<uint64_t>& seeds);

struct GridCell {
  int phase = 0;  // 0: alpha sweep with beta = 0, 1: beta sweep with best alpha
  double alpha = 0.0;
  double beta = 0.0;
  double best_val_dice = 0.0;
  double final_mean_score = 0.0;
  double min_mean_score = 0.0;
};

struct GridSearchResult {
  double best_alpha = 0.0;
  double best_beta = 0.0;
  std::vector<GridCell> cells;
};

// Tunes one parameter at a time: alpha over its grid with beta = 0, then
// beta with the chosen alpha; selection by validation Dice.
GridSearchResult grid_search(const ExperimentConfig& cfg);

int cmd_synth(const ExperimentConfig& cfg);
int cmd_train(const ExperimentConfig& cfg);
int cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path,
             const std::string& split);
int cmd_compare(const ExperimentConfig& cfg, const std::vector<Method>& methods,
                const std::vector<uint64_t>& seeds);
int cmd_gradcheck(const GradCheckOptions& opts);
int cmd_gridsearch(const ExperimentConfig& cfg);

// min(ADACS_WORKERS, hardware concurrency), at least 1.
int worker_count();

}  // namespace adacs
