#pragma once

#include <span>
#include <utility>
#include <vector>

#include "fracflow/grid.hpp"

namespace fracflow {

// Grünwald-Letnikov coefficients w_0..w_N for one fractional order alpha in [0, 2].
class GLWeights {
public:
    GLWeights(double alpha, int n);

    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] std::span<const double> w() const noexcept { return w_; }
    [[nodiscard]] double operator[](std::size_t k) const noexcept { return w_[k]; }
    // Number of coefficients (N + 1).
    [[nodiscard]] std::size_t size() const noexcept { return w_.size(); }
    // Index one past the last nonzero coefficient; sums may stop there.
    [[nodiscard]] std::size_t support() const noexcept { return support_; }

private:
    double alpha_;
    std::vector<double> w_;
    std::size_t support_;
};

// w_0 = 1, w_k = (1 - (alpha + 1) / k) w_{k-1}, k = 1..n.
[[nodiscard]] GLWeights gl_weights(double alpha, int n);

// Left (backward) operators: sum_{k=0}^{i} w_k f(i-k). Right (forward) operators:
// sum_{k=0}^{N-1-i} w_k f(i+k). Each pixel sums in ascending k.
[[nodiscard]] ScalarGrid frac_dx_minus(const ScalarGrid& f, const GLWeights& w);
[[nodiscard]] ScalarGrid frac_dx_plus(const ScalarGrid& f, const GLWeights& w);
[[nodiscard]] ScalarGrid frac_dy_minus(const ScalarGrid& f, const GLWeights& w);
[[nodiscard]] ScalarGrid frac_dy_plus(const ScalarGrid& f, const GLWeights& w);

// (D_x-^alpha f, D_y-^alpha f).
[[nodiscard]] std::pair<ScalarGrid, ScalarGrid> frac_grad(const ScalarGrid& f,
                                                          const GLWeights& w);

// D_x+^alpha D_x-^alpha f and D_y+^alpha D_y-^alpha f, applied in that order.
[[nodiscard]] ScalarGrid frac_compose_xx(const ScalarGrid& f, const GLWeights& w);
[[nodiscard]] ScalarGrid frac_compose_yy(const ScalarGrid& f, const GLWeights& w);

// Diagonal of frac_compose_xx + frac_compose_yy on a width x height grid:
// sum_{m=0}^{W-1-i} w_m^2 + sum_{m=0}^{H-1-j} w_m^2 at pixel (i, j).
[[nodiscard]] ScalarGrid frac_compose_diagonal(int width, int height, const GLWeights& w);

}  // namespace fracflow
