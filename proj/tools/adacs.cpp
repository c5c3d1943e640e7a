#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "adacs/config.hpp"
#include "adacs/harness.hpp"
#include "adacs/training.hpp"

namespace {

// exit codes: 0 success, 1 config error, 2 runtime abort, 3 gradcheck failure

adacs::ExperimentConfig load_config(const std::string& path, const std::string& out_override,
                                    long long seed_override) {
  adacs::ExperimentConfig cfg = adacs::load_experiment_config(path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (seed_override >= 0) {
    cfg.train.seed = static_cast<uint64_t>(seed_override);
    cfg.synth.seed = cfg.train.seed;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adacs: adaptive correspondence scoring for deformable 2D registration"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  std::string methods_arg = "none,adacs";
  std::string checkpoint;
  std::string split = "test";
  double tol = 1e-5;
  double step = 1e-6;
  long long gc_seed = 20240801;

  const auto add_common = [&](CLI::App* cmd, bool config_required) {
    cmd->add_option("--config", config_path, "experiment config (key = value lines)")
        ->required(config_required);
    cmd->add_option("--out", out_dir, "override the output directory");
    cmd->add_option("--seed", seed, "override the experiment seed");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset on disk");
  add_common(synth, true);

  CLI::App* train = app.add_subcommand("train", "train one method, write history + checkpoints");
  add_common(train, true);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  add_common(eval, true);
  eval->add_option("--checkpoint", checkpoint, "displacement checkpoint")->required();
  eval->add_option("--split", split, "train|val|test");

  CLI::App* compare = app.add_subcommand("compare", "train and compare methods with paired tests");
  add_common(compare, true);
  compare->add_option("--methods", methods_arg, "comma list of methods");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference audit of all adjoints");
  gradcheck->add_option("--tol", tol, "relative-error tolerance");
  gradcheck->add_option("--step", step, "finite-difference step");
  gradcheck->add_option("--seed", gc_seed, "random seed");

  CLI::App* gridsearch =
      app.add_subcommand("gridsearch", "sequential alpha-then-beta hyperparameter search");
  add_common(gridsearch, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gradcheck->parsed()) {
      adacs::GradCheckOptions opts;
      opts.tol_loss = tol;
      opts.tol_e2e = tol * 10.0;
      opts.step = step;
      opts.seed = static_cast<uint64_t>(gc_seed);
      return adacs::cmd_gradcheck(opts);
    }
    const adacs::ExperimentConfig cfg = load_config(config_path, out_dir, seed);
    if (synth->parsed()) return adacs::cmd_synth(cfg);
    if (train->parsed()) return adacs::cmd_train(cfg);
    if (eval->parsed()) return adacs::cmd_eval(cfg, checkpoint, split);
    if (compare->parsed()) {
      std::vector<adacs::Method> methods;
      std::string cur;
      for (char c : methods_arg + ",") {
        if (c == ',') {
          if (!cur.empty()) {
            const auto m = adacs::parse_method(cur);
            if (!m) {
              std::fprintf(stderr, "invalid method '%s' (valid: none, adacs, adareg, adaframe, "
                                   "nll, beta-nll)\n",
                           cur.c_str());
              return 1;
            }
            methods.push_back(*m);
            cur.clear();
          }
        } else {
          cur.push_back(c);
        }
      }
      return adacs::cmd_compare(cfg, methods, cfg.eval_seeds);
    }
    if (gridsearch->parsed()) return adacs::cmd_gridsearch(cfg);
  } catch (const adacs::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
