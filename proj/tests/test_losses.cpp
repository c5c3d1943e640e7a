#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "adacs/losses.hpp"
#include "adacs/rng.hpp"

using namespace adacs;

namespace {

Image random_image(Rng& rng, int w, int h) {
  Image img(w, h, 0.0);
  for (double& v : img.data) v = rng.uniform(0.05, 0.95);
  return img;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("loss_baseline value") {
  SUBCASE("perfect reconstruction with zero field is zero") {
    const Image t(4, 4, 0.3);
    const DisplacementField zero(4, 4);
    CHECK(loss_baseline(t, t, zero, 1.0).value == 0.0);
  }
  SUBCASE("linear ramp smoothness, hand evaluated on 4x4") {
    // dx(i,j) = j: squared forward differences are 1 except the last column,
    // summed over 4 rows -> 12; value = 12 / 16 with lambda = 1
    const Image t(4, 4, 0.3);
    DisplacementField disp(4, 4);
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) disp.dx[y * 4 + x] = x;
    }
    CHECK(loss_baseline(t, t, disp, 1.0).value == doctest::Approx(0.75).epsilon(1e-14));
  }
  SUBCASE("lambda = 0 reduces to the mean residual") {
    Rng rng(2);
    const Image t = random_image(rng, 5, 3), w = random_image(rng, 5, 3);
    DisplacementField disp(5, 3);
    for (double& v : disp.dx) v = rng.uniform(-2, 2);
    CHECK(loss_baseline(t, w, disp, 0.0).value ==
          doctest::Approx(mean_residual(t, w)).epsilon(1e-14));
  }
}

TEST_CASE("loss_de") {
  Rng rng(5);
  const Image t = random_image(rng, 4, 4), w = random_image(rng, 4, 4);
  DisplacementField disp(4, 4);
  for (double& v : disp.dx) v = rng.uniform(-2, 2);
  for (double& v : disp.dy) v = rng.uniform(-2, 2);

  SUBCASE("unit score recovers the baseline objective exactly") {
    const ScoreMap ones(4, 4, 1.0);
    const DisplacementLoss a = loss_de(t, w, disp, ones, 0.37);
    const DisplacementLoss b = loss_baseline(t, w, disp, 0.37);
    CHECK(a.value == b.value);
    CHECK(a.d_warped == b.d_warped);
    CHECK(a.d_dx == b.d_dx);
    CHECK(a.d_dy == b.d_dy);
  }
  SUBCASE("zero score with lambda 0 kills the objective") {
    const ScoreMap zeros(4, 4, 0.0);
    const DisplacementField zero_field(4, 4);
    CHECK(loss_de(t, w, zero_field, zeros, 0.0).value == 0.0);
  }
  SUBCASE("half-weighted residual, hand evaluated") {
    const Image target(4, 4, 0.5);
    const Image warped(4, 4, 0.3);  // residual 0.04 everywhere
    ScoreMap score(4, 4, 0.0);
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 2; ++x) score.s[y * 4 + x] = 1.0;
    }
    const DisplacementField zero_field(4, 4);
    CHECK(loss_de(target, warped, zero_field, score, 0.0).value ==
          doctest::Approx(0.02).epsilon(1e-12));
  }
  SUBCASE("score outside [0,1] is rejected") {
    ScoreMap bad(4, 4, 0.5);
    bad.s[3] = 1.5;
    CHECK_THROWS_AS(loss_de(t, w, disp, bad, 0.1), std::invalid_argument);
  }
  SUBCASE("the stopped score slot has no adjoint, the live ones do") {
    const ScoreMap s(4, 4, 0.25);
    const DisplacementLoss loss = loss_de(t, w, disp, s, 0.1);
    // adjoint of warped treats the score as a constant weight
    for (size_t i = 0; i < t.size(); ++i) {
      CHECK(loss.d_warped[i] ==
            doctest::Approx(2.0 * 0.25 * (w.data[i] - t.data[i]) / 16.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("loss_scs") {
  SUBCASE("zero residual gives zero for any score") {
    const Image t(3, 3, 0.6);
    const ScoreMap s(3, 3, 0.8);
    CHECK(loss_scs(t, t, s).value == 0.0);
  }
  SUBCASE("unit score over constant residual") {
    const Image t(2, 2, 0.75), w(2, 2, 0.25);  // residual 0.25
    const ScoreMap s(2, 2, 1.0);
    CHECK(loss_scs(t, w, s).value == doctest::Approx(0.25).epsilon(1e-14));
  }
  SUBCASE("adjoint is the residual over |Omega|") {
    Rng rng(9);
    const Image t = random_image(rng, 4, 4), w = random_image(rng, 4, 4);
    const ScoreMap s(4, 4, 0.5);
    const ScoreLoss loss = loss_scs(t, w, s);
    for (size_t i = 0; i < t.size(); ++i) {
      const double r = (t.data[i] - w.data[i]) * (t.data[i] - w.data[i]);
      CHECK(loss.d_score[i] == doctest::Approx(r / 16.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("loss_reg") {
  CHECK(loss_reg(ScoreMap(3, 3, 1.0)).value == 0.0);
  CHECK(loss_reg(ScoreMap(3, 3, 0.0)).value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(loss_reg(ScoreMap(3, 3, 0.5)).value == doctest::Approx(0.25).epsilon(1e-15));
  const ScoreMap s(2, 2, 0.2);
  const ScoreLoss loss = loss_reg(s);
  for (double g : loss.d_score) CHECK(g == doctest::Approx(-2.0 * 0.8 / 4.0).epsilon(1e-14));
}

TEST_CASE("mean_residual") {
  CHECK(mean_residual(Image(3, 3, 0.4), Image(3, 3, 0.4)) == 0.0);
  CHECK(mean_residual(Image(3, 3, 1.0), Image(3, 3, 0.0)) == 1.0);
  const Image t = Image::from_data(4, 1, {0.0, std::sqrt(0.5), 1.0, std::sqrt(0.5)});
  const Image w(4, 1, 0.0);
  CHECK(mean_residual(t, w) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cosine_activation") {
  CHECK(cosine_activation(0.0) == 1.0);
  CHECK(cosine_activation(1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cosine_activation(0.5) == doctest::Approx(0.70710678118654752).epsilon(1e-14));
  CHECK_THROWS_AS(cosine_activation(-0.01), std::domain_error);
  CHECK_THROWS_AS(cosine_activation(1.01), std::domain_error);

  // strictly decreasing and concave over a fine grid
  double prev = cosine_activation(0.0);
  double prev_diff = 0.0;
  bool first = true;
  for (int i = 1; i <= 1000; ++i) {
    const double cur = cosine_activation(i / 1000.0);
    CHECK(cur < prev);
    const double diff = cur - prev;
    if (!first) CHECK(diff <= prev_diff + 1e-12);
    prev_diff = diff;
    prev = cur;
    first = false;
  }
}

TEST_CASE("ema_update") {
  SUBCASE("first step from zero") {
    const MomentumState m0{0.0, 0.99};
    CHECK(ema_update(m0, 1.0).m == doctest::Approx(0.01).epsilon(1e-15));
  }
  SUBCASE("zero signal keeps zero") {
    MomentumState m{0.0, 0.99};
    for (int i = 0; i < 100; ++i) m = ema_update(m, 0.0);
    CHECK(m.m == 0.0);
  }
  SUBCASE("closed form of the constant-signal recurrence") {
    MomentumState m{0.0, 0.99};
    for (int t = 1; t <= 500; ++t) {
      m = ema_update(m, 0.8);
      const double expected = 0.8 * (1.0 - std::pow(0.99, t));
      CHECK(std::fabs(m.m - expected) < 1e-12);
    }
  }
  SUBCASE("convex combination bounds") {
    Rng rng(4);
    MomentumState m{0.3, 0.99};
    for (int i = 0; i < 200; ++i) {
      const double b = rng.uniform();
      const double lo = std::min(m.m, b), hi = std::max(m.m, b);
      m = ema_update(m, b);
      CHECK(m.m >= lo - 1e-15);
      CHECK(m.m <= hi + 1e-15);
    }
  }
  SUBCASE("out-of-range signal rejected") {
    CHECK_THROWS_AS(ema_update(MomentumState{}, 1.2), std::domain_error);
  }
}

TEST_CASE("loss_tv") {
  SUBCASE("constant score is zero for any weight") {
    CHECK(loss_tv(ScoreMap(5, 5, 0.4), 0.7).value == 0.0);
  }
  SUBCASE("zero weight is zero for any score") {
    Rng rng(8);
    ScoreMap s(4, 4, 0.0);
    for (double& v : s.s) v = rng.uniform();
    CHECK(loss_tv(s, 0.0).value == 0.0);
  }
  SUBCASE("1x3 spike, hand evaluated") {
    const ScoreMap s = ScoreMap::from_data(3, 1, {0.0, 1.0, 0.0});
    CHECK(loss_tv(s, 1.0).value == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  }
}

TEST_CASE("loss_se") {
  Rng rng(12);
  const Image t = random_image(rng, 4, 4), w = random_image(rng, 4, 4);
  ScoreMap s(4, 4, 0.0);
  for (double& v : s.s) v = rng.uniform();

  SUBCASE("alpha = beta = 0 equals the scoring data term") {
    const ScoreLoss a = loss_se(t, w, s, ScoringWeights{0.0, 0.0, 0.0}, 0.5);
    const ScoreLoss b = loss_scs(t, w, s);
    CHECK(a.value == b.value);
    CHECK(a.d_score == b.d_score);
  }
  SUBCASE("zero residual leaves only the degeneracy penalty") {
    const ScoreMap c(4, 4, 0.3);
    const ScoreLoss loss = loss_se(t, t, c, ScoringWeights{0.7, 2.0, 0.0}, 0.9);
    CHECK(loss.value == doctest::Approx(0.7 * 0.49).epsilon(1e-13));
  }
  SUBCASE("weighted sum of the three components") {
    const ScoringWeights weights{0.4, 0.2, 0.0};
    const double m = 0.6;
    const ScoreLoss combined = loss_se(t, w, s, weights, m);
    const double expected = loss_scs(t, w, s).value + 0.4 * loss_reg(s).value +
                            0.2 * loss_tv(s, m).value;
    CHECK(combined.value == doctest::Approx(expected).epsilon(1e-14));
  }
}

}  // TEST_SUITE
