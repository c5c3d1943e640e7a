#include "adacs/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace adacs {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

ConfigFile ConfigFile::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str(), path);
}

ConfigFile ConfigFile::from_string(const std::string& text, const std::string& name) {
  ConfigFile cf;
  cf.name_ = name;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(name + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
    }
    if (cf.entries_.count(key)) {
      throw ConfigError(name + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                        "' (first at line " + std::to_string(cf.entries_[key].line) + ")");
    }
    cf.entries_[key] = Entry{value, lineno, false};
  }
  return cf;
}

const ConfigFile::Entry* ConfigFile::find(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  it->second.used = true;
  return &it->second;
}

void ConfigFile::fail(const std::string& key, const std::string& what) const {
  const auto it = entries_.find(key);
  const int line = it == entries_.end() ? 0 : it->second.line;
  throw ConfigError(name_ + ":" + std::to_string(line) + ": key '" + key + "': " + what);
}

bool ConfigFile::has(const std::string& key) const { return entries_.count(key) != 0; }

int ConfigFile::line_of(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.line;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

double ConfigFile::get_double(const std::string& key, double fallback) {
  const Entry* e = find(key);
  if (!e) return fallback;
  try {
    size_t pos = 0;
    const double v = std::stod(e->value, &pos);
    if (pos != e->value.size()) throw std::invalid_argument(e->value);
    return v;
  } catch (const std::exception&) {
    fail(key, "expected a number, got '" + e->value + "'");
  }
}

int ConfigFile::get_int(const std::string& key, int fallback) {
  const Entry* e = find(key);
  if (!e) return fallback;
  try {
    size_t pos = 0;
    const int v = std::stoi(e->value, &pos);
    if (pos != e->value.size()) throw std::invalid_argument(e->value);
    return v;
  } catch (const std::exception&) {
    fail(key, "expected an integer, got '" + e->value + "'");
  }
}

uint64_t ConfigFile::get_u64(const std::string& key, uint64_t fallback) {
  const Entry* e = find(key);
  if (!e) return fallback;
  try {
    size_t pos = 0;
    const uint64_t v = std::stoull(e->value, &pos);
    if (pos != e->value.size()) throw std::invalid_argument(e->value);
    return v;
  } catch (const std::exception&) {
    fail(key, "expected an unsigned integer, got '" + e->value + "'");
  }
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) {
  const Entry* e = find(key);
  if (!e) return fallback;
  if (e->value == "true" || e->value == "1") return true;
  if (e->value == "false" || e->value == "0") return false;
  fail(key, "expected true/false, got '" + e->value + "'");
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

std::vector<double> ConfigFile::get_double_list(const std::string& key,
                                                std::vector<double> fallback) {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::vector<double> out;
  for (const std::string& tok : split_list(e->value)) {
    if (tok.empty()) fail(key, "empty list element");
    try {
      size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      fail(key, "bad list element '" + tok + "'");
    }
  }
  return out;
}

std::vector<uint64_t> ConfigFile::get_u64_list(const std::string& key,
                                               std::vector<uint64_t> fallback) {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::vector<uint64_t> out;
  for (const std::string& tok : split_list(e->value)) {
    if (tok.empty()) fail(key, "empty list element");
    try {
      size_t pos = 0;
      out.push_back(std::stoull(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      fail(key, "bad list element '" + tok + "'");
    }
  }
  return out;
}

void ConfigFile::reject_unknown_keys() const {
  for (const auto& [key, entry] : entries_) {
    if (!entry.used) {
      throw ConfigError(name_ + ":" + std::to_string(entry.line) + ": unknown key '" + key + "'");
    }
  }
}

ExperimentConfig experiment_config_from(ConfigFile& file) {
  ExperimentConfig cfg;

  const std::string method = file.get_string("method", "adacs");
  const auto parsed = parse_method(method);
  if (!parsed) {
    throw ConfigError(file.name() + ":" + std::to_string(file.line_of("method")) +
                      ": invalid method '" + method +
                      "' (valid: none, adacs, adareg, adaframe, nll, beta-nll)");
  }
  cfg.train.method = *parsed;

  const std::string estimator = file.get_string("estimator", "conv-net");
  if (estimator == "conv-net") {
    cfg.train.estimator = EstimatorKind::ConvNet;
  } else if (estimator == "direct-field") {
    cfg.train.estimator = EstimatorKind::DirectField;
  } else {
    throw ConfigError(file.name() + ":" + std::to_string(file.line_of("estimator")) +
                      ": invalid estimator '" + estimator +
                      "' (valid: conv-net, direct-field)");
  }

  cfg.train.epochs = file.get_int("epochs", cfg.train.epochs);
  cfg.train.warmup = file.get_int("warmup", cfg.train.warmup);
  cfg.train.eta = file.get_double("eta", cfg.train.eta);
  cfg.train.lambda = file.get_double("lambda", cfg.train.lambda);
  cfg.train.alpha = file.get_double("alpha", cfg.train.alpha);
  cfg.train.beta = file.get_double("beta", cfg.train.beta);
  cfg.train.gamma = file.get_double("gamma", cfg.train.gamma);
  cfg.train.batch_size = file.get_int("batch", cfg.train.batch_size);
  cfg.train.seed = file.get_u64("seed", cfg.train.seed);
  cfg.train.base_width = file.get_int("base_width", cfg.train.base_width);
  cfg.train.depth = file.get_int("depth", cfg.train.depth);
  cfg.train.beta_nll = file.get_double("beta_nll", cfg.train.beta_nll);

  cfg.data_dir = file.get_string("data_dir", "");
  static const char* kSynthKeys[] = {"size",          "texture_sigma",  "amplitude",
                                     "field_sigma",   "nuisance_count", "nuisance_radius",
                                     "nuisance_kind", "noise",          "radial"};
  if (!cfg.data_dir.empty()) {
    for (const char* key : kSynthKeys) {
      if (file.has(key)) {
        throw ConfigError(file.name() + ":" + std::to_string(file.line_of(key)) + ": key '" +
                          key + "' conflicts with data_dir (line " +
                          std::to_string(file.line_of("data_dir")) +
                          "); exactly one data source allowed");
      }
    }
  }
  cfg.synth.size = file.get_int("size", cfg.synth.size);
  cfg.synth.texture_sigma = file.get_double("texture_sigma", cfg.synth.texture_sigma);
  cfg.synth.amplitude = file.get_double("amplitude", cfg.synth.amplitude);
  cfg.synth.field_sigma = file.get_double("field_sigma", cfg.synth.field_sigma);
  cfg.synth.nuisance_count = file.get_int("nuisance_count", cfg.synth.nuisance_count);
  cfg.synth.nuisance_radius = file.get_double("nuisance_radius", cfg.synth.nuisance_radius);
  const std::string kind = file.get_string("nuisance_kind", "noise-fill");
  if (kind == "noise-fill") {
    cfg.synth.nuisance_kind = NuisanceKind::NoiseFill;
  } else if (kind == "constant-fill") {
    cfg.synth.nuisance_kind = NuisanceKind::ConstantFill;
  } else {
    throw ConfigError(file.name() + ":" + std::to_string(file.line_of("nuisance_kind")) +
                      ": invalid nuisance_kind '" + kind +
                      "' (valid: noise-fill, constant-fill)");
  }
  cfg.synth.noise_level = file.get_double("noise", cfg.synth.noise_level);
  cfg.synth.radial_motion = file.get_bool("radial", cfg.synth.radial_motion);
  cfg.synth.seed = cfg.train.seed;

  cfg.count = file.get_int("count", cfg.count);
  cfg.train_ratio = file.get_double("train_ratio", cfg.train_ratio);
  cfg.val_ratio = file.get_double("val_ratio", cfg.val_ratio);
  cfg.out_dir = file.get_string("out_dir", cfg.out_dir);
  cfg.export_every = file.get_int("export_every", cfg.export_every);
  cfg.eval_seeds = file.get_u64_list("eval_seeds", {cfg.train.seed});
  cfg.alpha_grid = file.get_double_list("alpha_grid", cfg.alpha_grid);
  cfg.beta_grid = file.get_double_list("beta_grid", cfg.beta_grid);

  file.reject_unknown_keys();

  try {
    cfg.train.validate();
    if (cfg.data_dir.empty()) validate_synth_config(cfg.synth);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(file.name() + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  ConfigFile file = ConfigFile::from_file(path);
  return experiment_config_from(file);
}

}  // namespace adacs
