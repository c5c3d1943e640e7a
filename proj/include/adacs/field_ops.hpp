#pragma once

#include <vector>

#include "adacs/grids.hpp"

namespace adacs {

// Spatial transform and discrete differential operators shared by every
// objective. Sample coordinates are x + u(x) with clamp-to-edge boundary;
// gradients are forward differences with a zero trailing row/column.

// output(x) = bilinear sample of src at x + u(x), coordinates clamped to the
// image rectangle. Identity displacement reproduces src exactly.
Image warp_bilinear(const Image& src, const DisplacementField& disp);

// Accumulates d(loss)/d(dx,dy) given d(loss)/d(warped). The bilinear weights
// are piecewise linear in the sample coordinate; at exact integer coordinates
// the right-sided derivative is used, and saturated (clamped) samples get a
// zero derivative.
void warp_bilinear_backward(const Image& src, const DisplacementField& disp,
                            const std::vector<double>& d_warped, std::vector<double>& d_dx,
                            std::vector<double>& d_dy);

// Label warp: nearest integer coordinate of x + u(x), clamped to bounds.
Mask warp_nearest(const Mask& mask, const DisplacementField& disp);

ResidualMap residual_map(const Image& target, const Image& warped);

struct SpatialGradient {
  std::vector<double> gx;  // g(i,j) = grid(i, j+1) - grid(i, j), last column 0
  std::vector<double> gy;  // analogous over rows, last row 0
};

SpatialGradient spatial_gradient(int width, int height, const std::vector<double>& grid);

// Transpose of the forward-difference operator: accumulates the adjoint of
// (ax, ay) into out (same layout as the grid the gradient was taken of).
void add_gradient_adjoint(int width, int height, const std::vector<double>& ax,
                          const std::vector<double>& ay, std::vector<double>& out);

}  // namespace adacs
