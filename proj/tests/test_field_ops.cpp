#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adacs/field_ops.hpp"
#include "adacs/rng.hpp"

using namespace adacs;

namespace {

Image random_image(Rng& rng, int w, int h) {
  Image img(w, h, 0.0);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

// independent reference: clamped integer lookup
double clamped_lookup(const Image& img, int x, int y) {
  x = std::clamp(x, 0, img.width - 1);
  y = std::clamp(y, 0, img.height - 1);
  return img.at(x, y);
}

}  // namespace

TEST_SUITE("field_core") {

TEST_CASE("warp_bilinear with zero displacement is the identity") {
  Rng rng(17);
  const Image src = random_image(rng, 7, 5);
  const DisplacementField disp(7, 5);
  const Image out = warp_bilinear(src, disp);
  CHECK(out.data == src.data);
}

TEST_CASE("warp_bilinear midpoint of a 1x2 row is the mean") {
  const Image src = Image::from_data(2, 1, {0.0, 1.0});
  DisplacementField disp(2, 1);
  disp.dx[0] = 0.5;
  const Image out = warp_bilinear(src, disp);
  CHECK(out.data[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("warp_bilinear shift by (1,0) takes the right neighbor, clamped") {
  std::vector<double> vals(9);
  for (int i = 0; i < 9; ++i) vals[i] = i / 8.0;
  const Image src = Image::from_data(3, 3, vals);
  DisplacementField disp(3, 3);
  std::fill(disp.dx.begin(), disp.dx.end(), 1.0);
  const Image out = warp_bilinear(src, disp);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 3; ++x) {
      CHECK(out.at(x, y) == clamped_lookup(src, x + 1, y));
    }
  }
}

TEST_CASE("warp_bilinear rejects shape mismatch") {
  const Image src(4, 4, 0.5);
  const DisplacementField disp(4, 5);
  CHECK_THROWS_AS(warp_bilinear(src, disp), std::invalid_argument);
}

TEST_CASE("warp_bilinear output stays within source range") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const Image src = random_image(rng, 8, 8);
    DisplacementField disp(8, 8);
    for (double& v : disp.dx) v = rng.uniform(-5.0, 5.0);
    for (double& v : disp.dy) v = rng.uniform(-5.0, 5.0);
    const double lo = *std::min_element(src.data.begin(), src.data.end());
    const double hi = *std::max_element(src.data.begin(), src.data.end());
    const Image out = warp_bilinear(src, disp);
    for (double v : out.data) {
      CHECK(v >= lo - 1e-12);
      CHECK(v <= hi + 1e-12);
    }
  }
}

TEST_CASE("warp_bilinear at integer displacements equals clamped index lookup") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Image src = random_image(rng, 8, 8);
    DisplacementField disp(8, 8);
    for (double& v : disp.dx) v = static_cast<double>(static_cast<int>(rng.below(13)) - 6);
    for (double& v : disp.dy) v = static_cast<double>(static_cast<int>(rng.below(13)) - 6);
    const Image out = warp_bilinear(src, disp);
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        const size_t i = static_cast<size_t>(y) * 8 + x;
        CHECK(out.at(x, y) ==
              clamped_lookup(src, x + static_cast<int>(disp.dx[i]),
                             y + static_cast<int>(disp.dy[i])));
      }
    }
  }
}

TEST_CASE("warp_bilinear_backward matches finite differences through the warp") {
  Rng rng(23);
  const int n = 6;
  const Image src = random_image(rng, n, n);
  DisplacementField disp(n, n);
  for (double& v : disp.dx) v = rng.uniform(-1.3, 1.3);
  for (double& v : disp.dy) v = rng.uniform(-1.3, 1.3);
  std::vector<double> adj(src.size());
  for (double& v : adj) v = rng.uniform(-1.0, 1.0);

  std::vector<double> ddx(src.size(), 0.0), ddy(src.size(), 0.0);
  warp_bilinear_backward(src, disp, adj, ddx, ddy);

  const auto probe = [&]() {
    const Image w = warp_bilinear(src, disp);
    double acc = 0.0;
    for (size_t i = 0; i < w.size(); ++i) acc += w.data[i] * adj[i];
    return acc;
  };
  const double h = 1e-6;
  for (size_t i = 0; i < src.size(); ++i) {
    for (int ch = 0; ch < 2; ++ch) {
      double& x = ch == 0 ? disp.dx[i] : disp.dy[i];
      const double saved = x;
      x = saved + h;
      const double up = probe();
      x = saved - h;
      const double dn = probe();
      x = saved;
      const double numeric = (up - dn) / (2 * h);
      const double analytic = ch == 0 ? ddx[i] : ddy[i];
      CHECK(std::fabs(analytic - numeric) < 1e-6);
    }
  }
}

TEST_CASE("warp_nearest identity and translation") {
  Mask m(3, 3);
  m.set(1, 1, true);
  const DisplacementField zero(3, 3);
  CHECK(warp_nearest(m, zero).m == m.m);

  DisplacementField left(3, 3);
  std::fill(left.dx.begin(), left.dx.end(), -1.0);
  const Mask out = warp_nearest(m, left);
  CHECK(out.at(2, 1));
  CHECK(out.count() == 1);
}

TEST_CASE("warp_nearest rounds toward the nearer integer") {
  Mask m(4, 1);
  m.set(1, 0, true);
  DisplacementField d(4, 1);
  std::fill(d.dx.begin(), d.dx.end(), 0.49);
  const Mask out = warp_nearest(m, d);
  // a fractional part of 0.49 keeps the nearer coordinate x
  CHECK(out.at(1, 0));
  CHECK_FALSE(out.at(0, 0));

  std::fill(d.dx.begin(), d.dx.end(), -0.49);
  const Mask out2 = warp_nearest(m, d);
  CHECK(out2.at(1, 0));
  CHECK_FALSE(out2.at(2, 0));
}

TEST_CASE("spatial_gradient forward differences with trailing zero") {
  SUBCASE("constant grid is zero") {
    const std::vector<double> g(12, 0.7);
    const SpatialGradient grad = spatial_gradient(4, 3, g);
    for (double v : grad.gx) CHECK(v == 0.0);
    for (double v : grad.gy) CHECK(v == 0.0);
  }
  SUBCASE("1x3 row") {
    const SpatialGradient grad = spatial_gradient(3, 1, {0.0, 1.0, 3.0});
    CHECK(grad.gx == std::vector<double>{1.0, 2.0, 0.0});
    CHECK(grad.gy == std::vector<double>{0.0, 0.0, 0.0});
  }
  SUBCASE("linear ramp") {
    std::vector<double> g(5 * 4);
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 5; ++x) g[y * 5 + x] = x;
    }
    const SpatialGradient grad = spatial_gradient(5, 4, g);
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 5; ++x) {
        CHECK(grad.gx[y * 5 + x] == (x == 4 ? 0.0 : 1.0));
        CHECK(grad.gy[y * 5 + x] == 0.0);
      }
    }
  }
}

TEST_CASE("spatial_gradient telescopes along rows") {
  Rng rng(3);
  std::vector<double> g(6 * 4);
  for (double& v : g) v = rng.uniform();
  const SpatialGradient grad = spatial_gradient(6, 4, g);
  for (int y = 0; y < 4; ++y) {
    double acc = 0.0;
    for (int x = 0; x < 5; ++x) acc += grad.gx[y * 6 + x];
    CHECK(acc == doctest::Approx(g[y * 6 + 5] - g[y * 6 + 0]).epsilon(1e-12));
  }
}

TEST_CASE("add_gradient_adjoint is the transpose of spatial_gradient") {
  Rng rng(5);
  const int w = 7, h = 5;
  std::vector<double> u(w * h), ax(w * h), ay(w * h);
  for (double& v : u) v = rng.uniform(-1, 1);
  for (double& v : ax) v = rng.uniform(-1, 1);
  for (double& v : ay) v = rng.uniform(-1, 1);
  const SpatialGradient g = spatial_gradient(w, h, u);
  double lhs = 0.0;
  for (size_t i = 0; i < u.size(); ++i) lhs += g.gx[i] * ax[i] + g.gy[i] * ay[i];
  std::vector<double> adj(w * h, 0.0);
  add_gradient_adjoint(w, h, ax, ay, adj);
  double rhs = 0.0;
  for (size_t i = 0; i < u.size(); ++i) rhs += u[i] * adj[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("residual_map") {
  SUBCASE("identical images give zeros") {
    const Image a(3, 2, 0.4);
    const ResidualMap r = residual_map(a, a);
    for (double v : r.r) CHECK(v == 0.0);
  }
  SUBCASE("maximal residual") {
    const Image t(2, 2, 1.0), w(2, 2, 0.0);
    const ResidualMap r = residual_map(t, w);
    for (double v : r.r) CHECK(v == 1.0);
  }
  SUBCASE("direct squaring") {
    const Image t = Image::from_data(2, 1, {0.2, 0.5});
    const Image w = Image::from_data(2, 1, {0.5, 0.1});
    const ResidualMap r = residual_map(t, w);
    CHECK(r.r[0] == doctest::Approx(0.09).epsilon(1e-12));
    CHECK(r.r[1] == doctest::Approx(0.16).epsilon(1e-12));
  }
  SUBCASE("values stay in [0,1] for valid images") {
    Rng rng(11);
    Image t(4, 4, 0.0), w(4, 4, 0.0);
    for (double& v : t.data) v = rng.uniform();
    for (double& v : w.data) v = rng.uniform();
    for (double v : residual_map(t, w).r) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(residual_map(Image(2, 2, 0.0), Image(3, 2, 0.0)), std::invalid_argument);
  }
}

}  // TEST_SUITE
