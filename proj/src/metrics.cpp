#include "adacs/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace adacs {

double dice(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "dice");
  size_t na = 0, nb = 0, inter = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const bool pa = a.m[i] != 0, pb = b.m[i] != 0;
    na += pa;
    nb += pb;
    inter += pa && pb;
  }
  if (na + nb == 0) throw std::invalid_argument("dice: both masks empty");
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

Contour extract_contour(const Mask& mask) {
  if (mask.empty()) throw std::invalid_argument("extract_contour: empty mask");
  Contour c;
  const int w = mask.width, h = mask.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      const bool border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
      const bool exposed = border || !mask.at(x - 1, y) || !mask.at(x + 1, y) ||
                           !mask.at(x, y - 1) || !mask.at(x, y + 1);
      if (exposed) c.pts.emplace_back(x, y);
    }
  }
  return c;
}

namespace {

// Sum of nearest-neighbor distances from each point of `from` to `to`, and
// the maximum such distance.
void directed_distances(const Contour& from, const Contour& to, double& sum, double& max) {
  sum = 0.0;
  max = 0.0;
  for (const auto& p : from.pts) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to.pts) {
      const double dx = p.first - q.first;
      const double dy = p.second - q.second;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) best = d2;
    }
    const double d = std::sqrt(best);
    sum += d;
    if (d > max) max = d;
  }
}

}  // namespace

double hausdorff(const Contour& a, const Contour& b) {
  if (a.pts.empty() || b.pts.empty()) throw std::invalid_argument("hausdorff: empty contour");
  double sum_ab, max_ab, sum_ba, max_ba;
  directed_distances(a, b, sum_ab, max_ab);
  directed_distances(b, a, sum_ba, max_ba);
  return std::max(max_ab, max_ba);
}

double asd(const Contour& a, const Contour& b) {
  if (a.pts.empty() || b.pts.empty()) throw std::invalid_argument("asd: empty contour");
  double sum_ab, max_ab, sum_ba, max_ba;
  directed_distances(a, b, sum_ab, max_ab);
  directed_distances(b, a, sum_ba, max_ba);
  return (sum_ab + sum_ba) / static_cast<double>(a.pts.size() + b.pts.size());
}

double endpoint_error(const DisplacementField& est, const DisplacementField& gt,
                      const Mask& roi) {
  require_same_shape(est, gt, "endpoint_error");
  require_same_shape(est, roi, "endpoint_error");
  double acc = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < est.size(); ++i) {
    if (roi.m[i] == 0) continue;
    const double dx = est.dx[i] - gt.dx[i];
    const double dy = est.dy[i] - gt.dy[i];
    acc += std::sqrt(dx * dx + dy * dy);
    ++n;
  }
  if (n == 0) throw std::invalid_argument("endpoint_error: empty roi");
  return acc / static_cast<double>(n);
}

TTestResult paired_ttest(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("paired_ttest: size mismatch");
  const size_t n = x.size();
  if (n < 2) throw std::invalid_argument("paired_ttest: needs at least 2 samples");
  double mean = 0.0;
  for (size_t i = 0; i < n; ++i) mean += x[i] - y[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = (x[i] - y[i]) - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  TTestResult res;
  if (sd == 0.0) {
    if (mean == 0.0) {
      std::fprintf(stderr, "paired_ttest: all differences zero; p defined as 1\n");
      res.t = 0.0;
      res.p = 1.0;
    } else {
      std::fprintf(stderr, "paired_ttest: zero variance with nonzero mean; p defined as 0\n");
      res.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
      res.p = 0.0;
    }
    return res;
  }
  res.t = mean * std::sqrt(static_cast<double>(n)) / sd;
  const boost::math::students_t dist(static_cast<double>(n - 1));
  res.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(res.t)));
  return res;
}

}  // namespace adacs
