#include "adacs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "adacs/field_ops.hpp"
#include "adacs/io.hpp"

namespace adacs {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string pair_file(int id, const char* part) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "pair_%04d_%s.grid", id, part);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error(dir + ": cannot create directory (" + ec.message() + ")");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  return out;
}

void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
  const size_t workers = std::min(static_cast<size_t>(worker_count()), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

ParamVector params_from_values(std::vector<double> values) {
  ParamVector p;
  p.grads.assign(values.size(), 0.0);
  p.values = std::move(values);
  return p;
}

}  // namespace

int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("ADACS_WORKERS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

const std::vector<SynthPair>& Dataset::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw std::invalid_argument("unknown split '" + name + "' (valid: train, val, test)");
}

Dataset load_or_generate(const ExperimentConfig& cfg) {
  if (!cfg.data_dir.empty()) return read_dataset(cfg.data_dir);
  const DatasetSplits s = generate_dataset(cfg.synth, cfg.count, cfg.train_ratio, cfg.val_ratio);
  return Dataset{s.train, s.val, s.test};
}

void write_dataset(const Dataset& ds, const std::string& dir) {
  ensure_dir(dir);
  std::ofstream man = open_out(dir + "/manifest.txt");
  man << "# adacs dataset manifest\n";
  man << "# pair <id> <split> <seed> <source> <target> <gt> <mask_source> <mask_target> "
         "<nuisance>\n";
  const auto dump = [&](const std::vector<SynthPair>& pairs, const char* split) {
    for (const SynthPair& p : pairs) {
      const std::string src = pair_file(p.id, "source");
      const std::string tgt = pair_file(p.id, "target");
      const std::string gt = pair_file(p.id, "gt");
      const std::string ms = pair_file(p.id, "mask_source");
      const std::string mt = pair_file(p.id, "mask_target");
      const std::string nu = pair_file(p.id, "nuisance");
      write_image_grid(dir + "/" + src, p.source);
      write_image_grid(dir + "/" + tgt, p.target);
      write_field_grid(dir + "/" + gt, p.gt);
      write_mask_grid(dir + "/" + ms, p.mask_source);
      write_mask_grid(dir + "/" + mt, p.mask_target);
      write_mask_grid(dir + "/" + nu, p.nuisance);
      man << "pair " << p.id << " " << split << " " << p.seed << " " << src << " " << tgt << " "
          << gt << " " << ms << " " << mt << " " << nu << "\n";
    }
  };
  dump(ds.train, "train");
  dump(ds.val, "val");
  dump(ds.test, "test");
  man.flush();
  if (!man) throw std::runtime_error(dir + "/manifest.txt: write failed");
}

Dataset read_dataset(const std::string& dir) {
  std::ifstream in(dir + "/manifest.txt");
  if (!in) throw std::runtime_error(dir + "/manifest.txt: cannot open");
  Dataset ds;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag, split, src, tgt, gt, ms, mt, nu;
    int id;
    uint64_t seed;
    if (!(ls >> tag >> id >> split >> seed >> src >> tgt >> gt >> ms >> mt >> nu) ||
        tag != "pair") {
      throw std::runtime_error(dir + "/manifest.txt:" + std::to_string(lineno) +
                               ": malformed pair line");
    }
    SynthPair p;
    p.id = id;
    p.seed = seed;
    p.source = read_image_grid(dir + "/" + src);
    p.target = read_image_grid(dir + "/" + tgt);
    if (gt != "-") p.gt = read_field_grid(dir + "/" + gt);
    if (ms != "-") p.mask_source = read_mask_grid(dir + "/" + ms);
    if (mt != "-") p.mask_target = read_mask_grid(dir + "/" + mt);
    if (nu != "-") p.nuisance = read_mask_grid(dir + "/" + nu);
    std::vector<SynthPair>* dst = nullptr;
    if (split == "train") dst = &ds.train;
    else if (split == "val") dst = &ds.val;
    else if (split == "test") dst = &ds.test;
    else
      throw std::runtime_error(dir + "/manifest.txt:" + std::to_string(lineno) +
                               ": unknown split '" + split + "'");
    dst->push_back(std::move(p));
  }
  if (ds.train.empty() && ds.val.empty() && ds.test.empty()) {
    throw std::runtime_error(dir + "/manifest.txt: no pairs listed");
  }
  return ds;
}

std::vector<PairMetrics> evaluate_pairs(const EstimatorSpec& spec, const ParamVector& params,
                                        const std::vector<SynthPair>& pairs) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<PairMetrics> out;
  out.reserve(pairs.size());
  for (const SynthPair& p : pairs) {
    PairMetrics m;
    m.id = p.id;
    m.dsc = m.hd = m.asd = m.epe = nan;
    const DisplacementField field = forward_displacement(params, spec, p.source, p.target);
    if (p.mask_source.size() > 0 && p.mask_target.size() > 0) {
      const Mask warped = warp_nearest(p.mask_source, field);
      if (!(warped.empty() && p.mask_target.empty())) {
        m.dsc = dice(warped, p.mask_target);
      }
      if (!warped.empty() && !p.mask_target.empty()) {
        const Contour ca = extract_contour(warped);
        const Contour cb = extract_contour(p.mask_target);
        m.hd = hausdorff(ca, cb);
        m.asd = asd(ca, cb);
      }
    }
    if (p.gt.size() > 0) {
      m.epe = endpoint_error(field, p.gt, Mask(field.width, field.height, true));
    }
    out.push_back(m);
  }
  return out;
}

ComparisonReport compare_methods(const ExperimentConfig& cfg, const std::vector<Method>& methods,
                                 const std::vector<uint64_t>& seeds) {
  if (methods.size() < 2) throw std::invalid_argument("compare: need at least 2 methods");
  if (seeds.empty()) throw std::invalid_argument("compare: need at least 1 seed");
  const Dataset ds = load_or_generate(cfg);
  if (ds.test.size() < 2) throw std::invalid_argument("compare: need at least 2 test pairs");

  struct Cell {
    size_t method_index;
    uint64_t seed;
    std::vector<PairMetrics> metrics;
  };
  std::vector<Cell> cells;
  for (size_t mi = 0; mi < methods.size(); ++mi) {
    for (uint64_t s : seeds) cells.push_back({mi, s, {}});
  }
  parallel_for(cells.size(), [&](size_t i) {
    TrainConfig tc = cfg.train;
    tc.method = methods[cells[i].method_index];
    tc.seed = cells[i].seed;
    const TrainResult res = run_training(tc, ds.train, ds.val);
    const ParamVector best = params_from_values(res.best_disp_params);
    cells[i].metrics = evaluate_pairs(res.disp_spec, best, ds.test);
  });

  ComparisonReport report;
  report.methods.resize(methods.size());
  for (size_t mi = 0; mi < methods.size(); ++mi) report.methods[mi].method = methods[mi];
  for (const Cell& c : cells) {
    MethodEval& ev = report.methods[c.method_index];
    for (const PairMetrics& m : c.metrics) {
      ev.dsc.push_back(m.dsc);
      ev.hd.push_back(m.hd);
      ev.asd.push_back(m.asd);
      ev.epe.push_back(m.epe);
    }
  }

  const auto mean_of = [](const std::vector<double>& v) {
    double acc = 0.0;
    size_t n = 0;
    for (double x : v) {
      if (std::isfinite(x)) {
        acc += x;
        ++n;
      }
    }
    return n ? acc / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  };

  report.reference = 0;
  double best_ref = -std::numeric_limits<double>::infinity();
  bool found_non_adacs = false;
  for (size_t mi = 0; mi < methods.size(); ++mi) {
    if (methods[mi] == Method::AdaCS) continue;
    const double md = mean_of(report.methods[mi].dsc);
    if (!found_non_adacs || md > best_ref) {
      best_ref = md;
      report.reference = mi;
      found_non_adacs = true;
    }
  }
  for (const MethodEval& ev : report.methods) {
    report.vs_reference.push_back(paired_ttest(ev.dsc, report.methods[report.reference].dsc));
  }
  return report;
}

GridSearchResult grid_search(const ExperimentConfig& cfg) {
  if (cfg.train.method != Method::AdaCS) {
    throw ConfigError("gridsearch: method must be adacs");
  }
  if (cfg.alpha_grid.empty() || cfg.beta_grid.empty()) {
    throw ConfigError("gridsearch: alpha_grid and beta_grid must be nonempty");
  }
  const Dataset ds = load_or_generate(cfg);
  GridSearchResult result;

  const auto run_cell = [&](double alpha, double beta, int phase) {
    TrainConfig tc = cfg.train;
    tc.alpha = alpha;
    tc.beta = beta;
    const TrainResult res = run_training(tc, ds.train, ds.val);
    GridCell cell;
    cell.phase = phase;
    cell.alpha = alpha;
    cell.beta = beta;
    cell.best_val_dice = res.best_epoch >= 0 ? res.best_val_dice
                                             : std::numeric_limits<double>::quiet_NaN();
    double final_score = std::numeric_limits<double>::quiet_NaN();
    double min_score = std::numeric_limits<double>::infinity();
    for (const EpochRecord& rec : res.history) {
      if (std::isfinite(rec.mean_score)) {
        final_score = rec.mean_score;
        min_score = std::min(min_score, rec.mean_score);
      }
    }
    cell.final_mean_score = final_score;
    cell.min_mean_score = std::isfinite(final_score) ? min_score
                                                     : std::numeric_limits<double>::quiet_NaN();
    return cell;
  };

  // phase 0: alpha sweep with beta = 0
  std::vector<GridCell> phase0(cfg.alpha_grid.size());
  parallel_for(phase0.size(), [&](size_t i) { phase0[i] = run_cell(cfg.alpha_grid[i], 0.0, 0); });
  size_t best_a = 0;
  for (size_t i = 1; i < phase0.size(); ++i) {
    const double cur = phase0[i].best_val_dice, best = phase0[best_a].best_val_dice;
    if (std::isfinite(cur) && (!std::isfinite(best) || cur > best)) best_a = i;
  }
  result.best_alpha = cfg.alpha_grid[best_a];

  // phase 1: beta sweep with the chosen alpha
  std::vector<GridCell> phase1(cfg.beta_grid.size());
  parallel_for(phase1.size(),
               [&](size_t i) { phase1[i] = run_cell(result.best_alpha, cfg.beta_grid[i], 1); });
  size_t best_b = 0;
  for (size_t i = 1; i < phase1.size(); ++i) {
    const double cur = phase1[i].best_val_dice, best = phase1[best_b].best_val_dice;
    if (std::isfinite(cur) && (!std::isfinite(best) || cur > best)) best_b = i;
  }
  result.best_beta = cfg.beta_grid[best_b];

  result.cells = std::move(phase0);
  result.cells.insert(result.cells.end(), phase1.begin(), phase1.end());
  return result;
}

int cmd_synth(const ExperimentConfig& cfg) {
  if (!cfg.data_dir.empty()) {
    throw ConfigError("synth: config must use the synthetic source, not data_dir");
  }
  const Dataset ds = load_or_generate(cfg);
  write_dataset(ds, cfg.out_dir);
  std::printf("wrote %zu train / %zu val / %zu test pairs to %s\n", ds.train.size(),
              ds.val.size(), ds.test.size(), cfg.out_dir.c_str());
  return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
  const Dataset ds = load_or_generate(cfg);
  ensure_dir(cfg.out_dir);

  const int progress_every = std::max(1, cfg.train.epochs / 10);
  const EpochHook hook = [&](const TrainState& st, const EpochRecord& rec) {
    if (cfg.train.method == Method::AdaCS && cfg.export_every > 0 &&
        rec.epoch % cfg.export_every == 0 && rec.epoch >= cfg.train.warmup &&
        cfg.train.warmup < cfg.train.epochs) {
      const std::vector<SynthPair>& pool = ds.val.empty() ? ds.train : ds.val;
      const ScoreMap s = forward_score(st.score_params, st.score_spec, pool[0].target);
      char name[64];
      std::snprintf(name, sizeof(name), "score_epoch_%04d.pgm", rec.epoch);
      write_pgm(s, cfg.out_dir + "/" + name);
    }
    if (rec.epoch % progress_every == 0 || rec.epoch + 1 == cfg.train.epochs) {
      std::printf("epoch %4d  L_de %-12s L_se %-12s mu %-10s m %-10s val_dice %s\n", rec.epoch,
                  fmt(rec.loss_de).c_str(), fmt(rec.loss_se).c_str(), fmt(rec.mu).c_str(),
                  fmt(rec.m).c_str(), fmt(rec.val_dice).c_str());
    }
  };

  const TrainResult res = run_training(cfg.train, ds.train, ds.val, hook);

  std::ofstream csv = open_out(cfg.out_dir + "/history.csv");
  csv << "epoch,L_de,L_se,mu,b,m,val_dice\n";
  for (const EpochRecord& r : res.history) {
    csv << r.epoch << "," << fmt(r.loss_de) << "," << fmt(r.loss_se) << "," << fmt(r.mu) << ","
        << fmt(r.b) << "," << fmt(r.m) << "," << fmt(r.val_dice) << "\n";
  }
  csv.flush();
  if (!csv) throw std::runtime_error("history.csv: write failed");

  write_checkpoint(cfg.out_dir + "/checkpoint_final.ckpt", res.disp_spec,
                   params_from_values(res.disp_params.values));
  write_checkpoint(cfg.out_dir + "/checkpoint_best.ckpt", res.disp_spec,
                   params_from_values(res.best_disp_params));
  if (cfg.train.method == Method::AdaCS && !res.score_params.values.empty()) {
    write_checkpoint(cfg.out_dir + "/score_final.ckpt", res.score_spec,
                     params_from_values(res.score_params.values));
  }
  std::printf("best validation Dice: %s (epoch %d)\n", fmt(res.best_val_dice).c_str(),
              res.best_epoch);
  return 0;
}

int cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path,
             const std::string& split) {
  const Checkpoint ck = read_checkpoint(checkpoint_path);
  if (ck.spec.head != HeadKind::Displacement) {
    throw std::runtime_error(checkpoint_path + ": not a displacement checkpoint");
  }
  const Dataset ds = load_or_generate(cfg);
  const std::vector<SynthPair>& pairs = ds.split(split);
  if (pairs.empty()) throw std::runtime_error("eval: split '" + split + "' is empty");
  if (ck.spec.width != pairs[0].source.width || ck.spec.height != pairs[0].source.height) {
    throw std::runtime_error("eval: checkpoint sized for " + std::to_string(ck.spec.width) + "x" +
                             std::to_string(ck.spec.height) + " but dataset is " +
                             std::to_string(pairs[0].source.width) + "x" +
                             std::to_string(pairs[0].source.height));
  }
  const std::vector<PairMetrics> metrics =
      evaluate_pairs(ck.spec, params_from_values(ck.params), pairs);

  ensure_dir(cfg.out_dir);
  std::ofstream csv = open_out(cfg.out_dir + "/metrics_" + split + ".csv");
  csv << "pair,method,dsc,hd,asd,epe\n";
  double sd = 0, sh = 0, sa = 0, se = 0;
  size_t nd = 0, nh = 0, na = 0, ne = 0;
  for (const PairMetrics& m : metrics) {
    csv << m.id << "," << method_name(cfg.train.method) << "," << fmt(m.dsc) << "," << fmt(m.hd)
        << "," << fmt(m.asd) << "," << fmt(m.epe) << "\n";
    if (std::isfinite(m.dsc)) sd += m.dsc, ++nd;
    if (std::isfinite(m.hd)) sh += m.hd, ++nh;
    if (std::isfinite(m.asd)) sa += m.asd, ++na;
    if (std::isfinite(m.epe)) se += m.epe, ++ne;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double md = nd ? sd / nd : nan, mh = nh ? sh / nh : nan;
  const double ma = na ? sa / na : nan, me = ne ? se / ne : nan;
  csv << "mean," << method_name(cfg.train.method) << "," << fmt(md) << "," << fmt(mh) << ","
      << fmt(ma) << "," << fmt(me) << "\n";
  csv.flush();
  if (!csv) throw std::runtime_error("metrics csv: write failed");
  std::printf("%s split: dsc %s  hd %s  asd %s  epe %s (%zu pairs)\n", split.c_str(),
              fmt(md).c_str(), fmt(mh).c_str(), fmt(ma).c_str(), fmt(me).c_str(), metrics.size());
  return 0;
}

namespace {

void summary_stats(const std::vector<double>& v, double& mean, double& sd) {
  double acc = 0.0;
  size_t n = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      acc += x;
      ++n;
    }
  }
  mean = n ? acc / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  double ss = 0.0;
  for (double x : v) {
    if (std::isfinite(x)) ss += (x - mean) * (x - mean);
  }
  sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1))
             : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

int cmd_compare(const ExperimentConfig& cfg, const std::vector<Method>& methods,
                const std::vector<uint64_t>& seeds) {
  const ComparisonReport report = compare_methods(cfg, methods, seeds);
  ensure_dir(cfg.out_dir);

  std::ofstream pairs_csv = open_out(cfg.out_dir + "/compare_pairs.csv");
  pairs_csv << "method,seed,pair,dsc,hd,asd,epe\n";
  const size_t pairs_per_seed = report.methods[0].dsc.size() / seeds.size();
  for (const MethodEval& ev : report.methods) {
    for (size_t si = 0; si < seeds.size(); ++si) {
      for (size_t pi = 0; pi < pairs_per_seed; ++pi) {
        const size_t i = si * pairs_per_seed + pi;
        pairs_csv << method_name(ev.method) << "," << seeds[si] << "," << pi << ","
                  << fmt(ev.dsc[i]) << "," << fmt(ev.hd[i]) << "," << fmt(ev.asd[i]) << ","
                  << fmt(ev.epe[i]) << "\n";
      }
    }
  }
  pairs_csv.flush();

  std::ofstream sum_csv = open_out(cfg.out_dir + "/compare_summary.csv");
  sum_csv << "method,mean_dsc,sd_dsc,mean_hd,sd_hd,mean_asd,sd_asd,mean_epe,sd_epe,"
             "t_vs_ref,p_vs_ref,reference\n";
  for (size_t mi = 0; mi < report.methods.size(); ++mi) {
    const MethodEval& ev = report.methods[mi];
    double md, sdd, mh, sdh, ma, sda, me, sde;
    summary_stats(ev.dsc, md, sdd);
    summary_stats(ev.hd, mh, sdh);
    summary_stats(ev.asd, ma, sda);
    summary_stats(ev.epe, me, sde);
    sum_csv << method_name(ev.method) << "," << fmt(md) << "," << fmt(sdd) << "," << fmt(mh)
            << "," << fmt(sdh) << "," << fmt(ma) << "," << fmt(sda) << "," << fmt(me) << ","
            << fmt(sde) << "," << fmt(report.vs_reference[mi].t) << ","
            << fmt(report.vs_reference[mi].p) << ","
            << method_name(report.methods[report.reference].method) << "\n";
    std::printf("%-9s dsc %.4f +- %.4f  hd %.3f  asd %.3f  epe %.4f  p_vs_%s %s\n",
                method_name(ev.method), md, sdd, mh, ma, me,
                method_name(report.methods[report.reference].method),
                fmt(report.vs_reference[mi].p).c_str());
  }
  sum_csv.flush();
  if (!sum_csv || !pairs_csv) throw std::runtime_error("compare csv: write failed");
  return 0;
}

int cmd_gradcheck(const GradCheckOptions& opts) {
  const GradCheckReport report = run_gradient_checks(opts);
  for (const GradCheckRow& row : report.rows) {
    std::printf("%-28s max_rel_err %-12s tol %-8s %s\n", row.name.c_str(),
                fmt(row.max_rel_err).c_str(), fmt(row.tol).c_str(), row.pass ? "PASS" : "FAIL");
  }
  return report.all_pass() ? 0 : 3;
}

int cmd_gridsearch(const ExperimentConfig& cfg) {
  const GridSearchResult res = grid_search(cfg);
  ensure_dir(cfg.out_dir);
  std::ofstream csv = open_out(cfg.out_dir + "/gridsearch.csv");
  csv << "phase,alpha,beta,best_val_dice,final_mean_score,min_mean_score\n";
  for (const GridCell& c : res.cells) {
    csv << c.phase << "," << fmt(c.alpha) << "," << fmt(c.beta) << "," << fmt(c.best_val_dice)
        << "," << fmt(c.final_mean_score) << "," << fmt(c.min_mean_score) << "\n";
  }
  csv.flush();
  if (!csv) throw std::runtime_error("gridsearch.csv: write failed");
  std::printf("best alpha %s, best beta %s\n", fmt(res.best_alpha).c_str(),
              fmt(res.best_beta).c_str());
  return 0;
}

}  // namespace adacs
