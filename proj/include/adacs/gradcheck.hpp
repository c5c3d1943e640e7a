#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace adacs {

// Central-finite-difference audit of every hand-written adjoint: the losses,
// both estimator kinds, and the composed params -> field -> warp -> loss
// chain. The numeric side evaluates only forward passes, so it is independent
// of the code it checks.

struct GradCheckRow {
  std::string name;
  double max_rel_err = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  bool all_pass() const;
};

// |a - b| / max(|a|, |b|, 1e-6); the floor makes structurally-zero pairs
// compare as zero and ignores magnitudes below finite-difference resolution.
double relative_error(double analytic, double numeric);

struct GradCheckOptions {
  uint64_t seed = 20240801;
  double step = 1e-6;
  double tol_loss = 1e-5;  // losses and per-estimator parameter gradients
  double tol_e2e = 1e-4;   // composed chain through the warp
  int instances = 20;      // random instances per check
  int grid = 16;           // instance side length
};

GradCheckReport run_gradient_checks(const GradCheckOptions& opts);

}  // namespace adacs
