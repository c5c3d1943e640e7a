#pragma once

#include <vector>

#include "adacs/field_ops.hpp"
#include "adacs/grids.hpp"

namespace adacs {

// Training objectives. Each loss returns its scalar value together with the
// adjoints of its differentiable inputs; inputs that the formulation treats
// as constants (stop-gradient) occupy parameter slots that simply have no
// adjoint in the result struct, so the contract holds by construction.

// Result of the displacement-side losses: weighted reconstruction residual
// plus smoothness on the field.
struct DisplacementLoss {
  double value = 0.0;
  std::vector<double> d_warped;  // adjoint of the warped source intensities
  std::vector<double> d_dx;      // adjoint of the displacement x channel
  std::vector<double> d_dy;      // adjoint of the displacement y channel
};

// Result of the scoring-side losses: only the score map is live.
struct ScoreLoss {
  double value = 0.0;
  std::vector<double> d_score;
};

// EMA of the cosine-activated mean residual. Immutable value type; updates
// return a new state.
struct MomentumState {
  double m = 0.0;
  double gamma = 0.99;
};

struct ScoringWeights {
  double alpha = 0.0;   // weight of the anti-degeneracy regularizer
  double beta = 0.0;    // weight of the momentum-guided total variation
  double lambda = 0.0;  // smoothness weight of the displacement objective
};

// mean(residual) + lambda * mean(|grad u|^2); the 1/|Omega| prefix covers
// both terms.
DisplacementLoss loss_baseline(const Image& target, const Image& warped,
                               const DisplacementField& disp, double lambda);

// Score-weighted data term: mean(score * residual) + lambda * mean(|grad u|^2).
// The score map is stop-gradient: it scales the residual but receives no
// adjoint. Scores outside [0,1] are rejected.
DisplacementLoss loss_de(const Image& target, const Image& warped, const DisplacementField& disp,
                         const ScoreMap& score_stopped, double lambda);

// Self-supervised scoring data term: mean(score * residual). The warped
// source is stop-gradient; the adjoint of the score is residual / |Omega|.
ScoreLoss loss_scs(const Image& target, const Image& warped_stopped, const ScoreMap& score);

// Anti-degeneracy penalty mean((1 - score)^2).
ScoreLoss loss_reg(const ScoreMap& score);

// Mean of the squared residuals; in [0,1] for valid images.
double mean_residual(const Image& target, const Image& warped);

// cos(pi/2 * mu), monotonically decreasing and concave on [0,1].
double cosine_activation(double mu);

// m <- gamma * m + (1 - gamma) * b. Requires b in [0,1].
MomentumState ema_update(MomentumState state, double b);

// m * mean(|grad score|^2) with the adjoint through the forward-difference
// transpose.
ScoreLoss loss_tv(const ScoreMap& score, double m);

// Combined scoring objective: scs + alpha * reg + beta * tv(m).
ScoreLoss loss_se(const Image& target, const Image& warped_stopped, const ScoreMap& score,
                  const ScoringWeights& weights, double m);

}  // namespace adacs
