#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "adacs/synthetic.hpp"
#include "adacs/training.hpp"

namespace adacs {

// Flat key = value experiment configs with # comments. Errors carry the
// offending line number and map to exit code 1.

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ConfigFile {
 public:
  static ConfigFile from_file(const std::string& path);
  static ConfigFile from_string(const std::string& text, const std::string& name = "<config>");

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  int get_int(const std::string& key, int fallback);
  uint64_t get_u64(const std::string& key, uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback);
  std::vector<uint64_t> get_u64_list(const std::string& key, std::vector<uint64_t> fallback);

  int line_of(const std::string& key) const;

  // Throws on keys that were never consumed (typos surface loudly).
  void reject_unknown_keys() const;

  const std::string& name() const { return name_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };
  std::string name_;
  std::map<std::string, Entry> entries_;

  const Entry* find(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
};

struct ExperimentConfig {
  TrainConfig train;
  SynthConfig synth;
  int count = 100;
  double train_ratio = 0.6;
  double val_ratio = 0.2;
  std::string data_dir;  // empty = synthetic source
  std::string out_dir = "out";
  int export_every = 25;
  std::vector<uint64_t> eval_seeds;  // defaults to {train.seed}
  std::vector<double> alpha_grid{0.0, 0.05, 0.1, 0.2};
  std::vector<double> beta_grid{0.0, 0.02, 0.05, 0.1};
};

// Parses and validates; enforces exactly one data source (synthetic keys xor
// data_dir).
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig experiment_config_from(ConfigFile& file);

}  // namespace adacs
