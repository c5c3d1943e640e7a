#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "adacs/estimators.hpp"
#include "adacs/field_ops.hpp"
#include "adacs/losses.hpp"
#include "adacs/rng.hpp"

using namespace adacs;

namespace {

EstimatorSpec make_spec(EstimatorKind kind, HeadKind head, int n, int depth = 1,
                        int base_width = 8) {
  EstimatorSpec spec;
  spec.kind = kind;
  spec.head = head;
  spec.in_channels = head == HeadKind::Score ? 1 : 2;
  spec.base_width = base_width;
  spec.depth = depth;
  spec.width = n;
  spec.height = n;
  return spec;
}

Image random_image(Rng& rng, int n) {
  Image img(n, n, 0.0);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("direct-field displacement is the parameter grid") {
  const EstimatorSpec spec = make_spec(EstimatorKind::DirectField, HeadKind::Displacement, 6);
  ParamVector params = init_params(spec, 1);
  const Image a(6, 6, 0.5), b(6, 6, 0.5);

  SUBCASE("zero init gives the zero field") {
    const DisplacementField f = forward_displacement(params, spec, a, b);
    for (double v : f.dx) CHECK(v == 0.0);
    for (double v : f.dy) CHECK(v == 0.0);
  }
  SUBCASE("parameters pass through unchanged") {
    Rng rng(3);
    for (double& v : params.values) v = rng.uniform(-2, 2);
    const DisplacementField f = forward_displacement(params, spec, a, b);
    for (size_t i = 0; i < f.size(); ++i) {
      CHECK(f.dx[i] == params.values[i]);
      CHECK(f.dy[i] == params.values[f.size() + i]);
    }
  }
}

TEST_CASE("conv net with all-zero parameters emits zeros through the linear head") {
  const EstimatorSpec spec = make_spec(EstimatorKind::ConvNet, HeadKind::Displacement, 8, 2);
  ParamVector params;
  params.values.assign(param_count(spec), 0.0);
  params.grads.assign(params.values.size(), 0.0);
  Rng rng(4);
  const DisplacementField f =
      forward_displacement(params, spec, random_image(rng, 8), random_image(rng, 8));
  for (double v : f.dx) CHECK(v == 0.0);
  for (double v : f.dy) CHECK(v == 0.0);
}

TEST_CASE("conv net output dims equal input dims for 32x32, depth 2") {
  const EstimatorSpec spec = make_spec(EstimatorKind::ConvNet, HeadKind::Displacement, 32, 2);
  ParamVector params = init_params(spec, 9);
  Rng rng(5);
  Image a(32, 32, 0.0), b(32, 32, 0.0);
  for (double& v : a.data) v = rng.uniform();
  for (double& v : b.data) v = rng.uniform();
  const DisplacementField f = forward_displacement(params, spec, a, b);
  CHECK(f.width == 32);
  CHECK(f.height == 32);
  CHECK(f.dx.size() == 32u * 32u);
}

TEST_CASE("conv net rejects dims not divisible by 2^depth") {
  const EstimatorSpec spec = make_spec(EstimatorKind::ConvNet, HeadKind::Displacement, 12, 3);
  CHECK_THROWS_AS(validate_spec(spec), std::invalid_argument);
}

TEST_CASE("score head") {
  SUBCASE("all-zero parameters give 0.5 everywhere") {
    const EstimatorSpec spec = make_spec(EstimatorKind::DirectField, HeadKind::Score, 5);
    const ParamVector params = init_params(spec, 0);
    const ScoreMap s = forward_score(params, spec, Image(5, 5, 0.2));
    for (double v : s.s) CHECK(v == 0.5);
  }
  SUBCASE("logit +10 saturates near one") {
    const EstimatorSpec spec = make_spec(EstimatorKind::DirectField, HeadKind::Score, 4);
    ParamVector params = init_params(spec, 0);
    for (double& v : params.values) v = 10.0;
    const ScoreMap s = forward_score(params, spec, Image(4, 4, 0.2));
    for (double v : s.s) CHECK(v == doctest::Approx(0.9999546021312976).epsilon(1e-12));
  }
  SUBCASE("conv output is strictly inside (0,1) for random parameters") {
    const EstimatorSpec spec = make_spec(EstimatorKind::ConvNet, HeadKind::Score, 8, 1);
    Rng rng(6);
    for (int trial = 0; trial < 5; ++trial) {
      ParamVector params = init_params(spec, rng.next_u64());
      const ScoreMap s = forward_score(params, spec, random_image(rng, 8));
      for (double v : s.s) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
    }
  }
}

TEST_CASE("init_params") {
  const EstimatorSpec spec = make_spec(EstimatorKind::ConvNet, HeadKind::Displacement, 16, 2);
  SUBCASE("same seed twice gives identical vectors") {
    const ParamVector a = init_params(spec, 42), b = init_params(spec, 42);
    CHECK(a.values == b.values);
  }
  SUBCASE("different seeds differ") {
    const ParamVector a = init_params(spec, 42), b = init_params(spec, 43);
    CHECK(a.values != b.values);
  }
  SUBCASE("first-layer weights respect the fan-in bound, biases start zero") {
    const ParamVector p = init_params(spec, 7);
    const double bound = std::sqrt(1.0 / (9.0 * 2.0));
    const size_t n_w = 2u * 8u * 9u;
    bool any_nonzero = false;
    for (size_t i = 0; i < n_w; ++i) {
      CHECK(std::fabs(p.values[i]) <= bound);
      any_nonzero = any_nonzero || p.values[i] != 0.0;
    }
    CHECK(any_nonzero);
    for (size_t i = n_w; i < n_w + 8; ++i) CHECK(p.values[i] == 0.0);
  }
}

TEST_CASE("backward") {
  Rng rng(8);
  SUBCASE("zero adjoint contributes nothing") {
    const EstimatorSpec spec = make_spec(EstimatorKind::ConvNet, HeadKind::Displacement, 8, 1);
    ParamVector params = init_params(spec, 3);
    ForwardCache cache;
    forward_displacement(params, spec, random_image(rng, 8), random_image(rng, 8), &cache);
    backward(params, spec, cache, Tensor(2, 8, 8));
    for (double g : params.grads) CHECK(g == 0.0);
  }
  SUBCASE("direct-field gradient is the adjoint itself") {
    const EstimatorSpec spec = make_spec(EstimatorKind::DirectField, HeadKind::Displacement, 4);
    ParamVector params = init_params(spec, 3);
    ForwardCache cache;
    forward_displacement(params, spec, Image(4, 4, 0.2), Image(4, 4, 0.8), &cache);
    Tensor adj(2, 4, 4);
    for (double& v : adj.v) v = rng.uniform(-1, 1);
    backward(params, spec, cache, adj);
    CHECK(params.grads == adj.v);
  }
  SUBCASE("stale cache is rejected") {
    const EstimatorSpec spec = make_spec(EstimatorKind::ConvNet, HeadKind::Displacement, 8, 1);
    ParamVector params = init_params(spec, 3);
    OptimState opt = make_optimizer(params.values.size(), 1e-3);
    ForwardCache cache;
    forward_displacement(params, spec, random_image(rng, 8), random_image(rng, 8), &cache);
    params.grads[0] = 1.0;
    optimizer_step(params, opt);  // bumps the version
    CHECK_THROWS_AS(backward(params, spec, cache, Tensor(2, 8, 8)), std::logic_error);
  }
}

TEST_CASE("optimizer_step") {
  SUBCASE("zero gradient leaves parameters unchanged and counts the step") {
    ParamVector p;
    p.values = {0.4, -0.2};
    p.grads = {0.0, 0.0};
    OptimState opt = make_optimizer(2, 1e-3);
    optimizer_step(p, opt);
    CHECK(p.values == std::vector<double>{0.4, -0.2});
    CHECK(opt.step == 1);
  }
  SUBCASE("constant positive gradient decreases the parameter monotonically") {
    ParamVector p;
    p.values = {1.0};
    p.grads = {0.0};
    OptimState opt = make_optimizer(1, 1e-2);
    double prev = p.values[0];
    for (int i = 0; i < 50; ++i) {
      p.grads[0] = 0.5;
      optimizer_step(p, opt);
      CHECK(p.values[0] < prev);
      prev = p.values[0];
    }
  }
  SUBCASE("first step magnitude is about the learning rate") {
    ParamVector p;
    p.values = {0.0};
    p.grads = {0.37};
    OptimState opt = make_optimizer(1, 1e-3);
    optimizer_step(p, opt);
    CHECK(std::fabs(-p.values[0] - 1e-3) < 1e-9);
  }
  SUBCASE("non-finite gradient aborts") {
    ParamVector p;
    p.values = {0.0};
    p.grads = {std::numeric_limits<double>::infinity()};
    OptimState opt = make_optimizer(1, 1e-3);
    CHECK_THROWS_AS(optimizer_step(p, opt), std::runtime_error);
  }
  SUBCASE("gradients are zeroed after the step") {
    ParamVector p;
    p.values = {0.0, 1.0};
    p.grads = {0.1, -0.2};
    OptimState opt = make_optimizer(2, 1e-3);
    optimizer_step(p, opt);
    CHECK(p.grads == std::vector<double>{0.0, 0.0});
  }
}

TEST_CASE("direct-field step on the baseline objective decreases the loss") {
  const int n = 8;
  Rng rng(11);
  Image src(n, n, 0.0), tgt(n, n, 0.0);
  for (double& v : src.data) v = rng.uniform(0.1, 0.9);
  for (double& v : tgt.data) v = rng.uniform(0.1, 0.9);
  const EstimatorSpec spec = make_spec(EstimatorKind::DirectField, HeadKind::Displacement, n);

  for (const double eta : {1e-3, 1e-4}) {
    ParamVector params = init_params(spec, 0);
    OptimState opt = make_optimizer(params.values.size(), eta);
    ForwardCache cache;
    const DisplacementField field = forward_displacement(params, spec, src, tgt, &cache);
    const Image warped = warp_bilinear(src, field);
    DisplacementLoss loss = loss_baseline(tgt, warped, field, 0.01);
    const double before = loss.value;
    warp_bilinear_backward(src, field, loss.d_warped, loss.d_dx, loss.d_dy);
    Tensor adj(2, n, n);
    std::copy(loss.d_dx.begin(), loss.d_dx.end(), adj.v.begin());
    std::copy(loss.d_dy.begin(), loss.d_dy.end(), adj.v.begin() + loss.d_dx.size());
    backward(params, spec, cache, adj);
    optimizer_step(params, opt);

    const DisplacementField after_field = forward_displacement(params, spec, src, tgt);
    const double after =
        loss_baseline(tgt, warp_bilinear(src, after_field), after_field, 0.01).value;
    CHECK(after < before);
  }
}

TEST_CASE("parameter counts") {
  CHECK(param_count(make_spec(EstimatorKind::DirectField, HeadKind::Displacement, 10)) == 200);
  CHECK(param_count(make_spec(EstimatorKind::DirectField, HeadKind::Score, 10)) == 100);
  // depth 1, base 8, 2 input channels:
  // enc0 2->8 (152), enc1 8->16 (1168), dec0 24->8 (1736), head 8->2 (18)
  CHECK(param_count(make_spec(EstimatorKind::ConvNet, HeadKind::Displacement, 16, 1)) == 3074);
}

}  // TEST_SUITE
