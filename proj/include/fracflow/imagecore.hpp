#pragma once

#include <vector>

#include "fracflow/grid.hpp"

namespace fracflow {

// Standard deviation of the pre-smoothing applied to full-resolution frames.
inline constexpr double kPresmoothSigma = 0.6;
// Coarsest pyramid level must keep both dimensions at least this large.
inline constexpr int kMinPyramidDim = 16;

// Separable Gaussian blur. Kernel radius ceil(3 sigma), renormalized to unit sum,
// half-sample symmetric (mirror) boundary extension.
[[nodiscard]] Plane gaussian_convolve(const Plane& img, double sigma);

// Catmull-Rom (a = -0.5) bicubic interpolation at real coordinates (x, y).
// Stencil indices outside the image clamp to the border (Neumann extension).
[[nodiscard]] double bicubic_sample(const Plane& img, double x, double y) noexcept;

// out(x) = img(x + flow(x)), bicubic.
[[nodiscard]] Plane warp_image(const Plane& img, const VectorField& flow);

// Central differences in the interior; the component normal to a border is zero there.
// A dimension of extent 1 has zero derivative along it.
[[nodiscard]] VectorField central_gradient(const Plane& img);

// Blur width used before subsampling by eta: sigma0 * sqrt(eta^-2 - 1).
[[nodiscard]] double downsample_sigma(double eta);

// Dimensions of the next-coarser level: ceil(eta * n).
[[nodiscard]] int scaled_dim(int n, double eta);

// Gaussian blur with downsample_sigma(eta), then bicubic resampling to
// ceil(eta * w) x ceil(eta * h). Output pixel i samples input coordinate i / eta.
[[nodiscard]] Plane downsample(const Plane& img, double eta);

// Number of levels actually built for the requested depth, keeping the coarsest
// level at least kMinPyramidDim in both dimensions (never fewer than one level).
[[nodiscard]] int effective_scales(int width, int height, double eta, int n_scales);

// levels[0] is the pre-smoothed input; levels[s] = downsample(levels[s-1], eta).
[[nodiscard]] std::vector<Plane> build_pyramid(const Plane& img, double eta, int n_scales);

// Bicubic resampling of each component to the finer grid (target pixel i samples
// i * eta), then scaling by 1/eta.
[[nodiscard]] VectorField upsample_flow(const VectorField& flow, double eta, int target_w,
                                        int target_h);

}  // namespace fracflow
