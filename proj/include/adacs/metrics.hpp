#pragma once

#include <utility>
#include <vector>

#include "adacs/grids.hpp"

namespace adacs {

// Anatomical conformance metrics on warped vs. ground-truth masks, endpoint
// error against synthetic ground truth, and the paired t-test used for the
// method comparisons. Distances are Euclidean in pixel units.

// Boundary pixels of a mask: mask-true with at least one mask-false
// 4-neighbor, or mask-true on the image border.
struct Contour {
  std::vector<std::pair<int, int>> pts;  // (x, y)
};

// 2|a and b| / (|a| + |b|). Throws when both masks are empty.
double dice(const Mask& a, const Mask& b);

Contour extract_contour(const Mask& mask);

// Exact symmetric Hausdorff distance (no percentile).
double hausdorff(const Contour& a, const Contour& b);

// Symmetric average surface distance: pooled mean of both directed
// nearest-neighbor distance sums.
double asd(const Contour& a, const Contour& b);

// Mean Euclidean error over roi-true pixels. Throws on an empty roi.
double endpoint_error(const DisplacementField& est, const DisplacementField& gt, const Mask& roi);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
};

// Two-sided paired t-test on d = x - y with n-1 degrees of freedom.
// Degenerate cases: all-zero differences give p = 1; zero variance with a
// nonzero mean gives t = +-inf and p = 0. Both are noted on stderr.
TTestResult paired_ttest(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace adacs
