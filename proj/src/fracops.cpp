#include "fracflow/fracops.hpp"

#include <algorithm>
#include <cstddef>
#include <string>

namespace fracflow {
namespace {

void require_weights(const ScalarGrid& f, const GLWeights& w, int extent, const char* op) {
    if (w.size() < static_cast<std::size_t>(extent)) {
        throw ValidationError(std::string(op) + ": need at least " + std::to_string(extent) +
                              " GL weights for a " + std::to_string(f.width()) + "x" +
                              std::to_string(f.height()) + " grid, have " +
                              std::to_string(w.size()));
    }
}

// One-dimensional kernels over a strided line of n samples.
void line_minus(const double* in, double* out, int n, std::ptrdiff_t stride,
                const GLWeights& w) {
    const int support = static_cast<int>(w.support());
    for (int i = 0; i < n; ++i) {
        const int kmax = std::min(i, support - 1);
        double acc = 0.0;
        for (int k = 0; k <= kmax; ++k) acc += w[k] * in[(i - k) * stride];
        out[i * stride] = acc;
    }
}

void line_plus(const double* in, double* out, int n, std::ptrdiff_t stride,
               const GLWeights& w) {
    const int support = static_cast<int>(w.support());
    for (int i = 0; i < n; ++i) {
        const int kmax = std::min(n - 1 - i, support - 1);
        double acc = 0.0;
        for (int k = 0; k <= kmax; ++k) acc += w[k] * in[(i + k) * stride];
        out[i * stride] = acc;
    }
}

template <typename Kernel>
ScalarGrid apply_x(const ScalarGrid& f, const GLWeights& w, Kernel kernel, const char* op) {
    require_weights(f, w, f.width(), op);
    ScalarGrid out(f.width(), f.height());
    const double* in = f.values().data();
    double* dst = out.values().data();
    const std::ptrdiff_t row = f.width();
    for (int y = 0; y < f.height(); ++y) {
        kernel(in + y * row, dst + y * row, f.width(), 1, w);
    }
    return out;
}

template <typename Kernel>
ScalarGrid apply_y(const ScalarGrid& f, const GLWeights& w, Kernel kernel, const char* op) {
    require_weights(f, w, f.height(), op);
    ScalarGrid out(f.width(), f.height());
    const double* in = f.values().data();
    double* dst = out.values().data();
    for (int x = 0; x < f.width(); ++x) {
        kernel(in + x, dst + x, f.height(), f.width(), w);
    }
    return out;
}

std::vector<double> squared_prefix_sums(const GLWeights& w, int n) {
    // prefix[m] = sum_{k=0}^{m} w_k^2
    std::vector<double> prefix(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (int m = 0; m < n; ++m) {
        acc += w[m] * w[m];
        prefix[m] = acc;
    }
    return prefix;
}

}  // namespace

GLWeights::GLWeights(double alpha, int n) : alpha_(alpha) {
    if (!(alpha >= 0.0 && alpha <= 2.0)) {
        throw ValidationError("alpha must be in [0,2], got " + std::to_string(alpha));
    }
    if (n < 0) {
        throw ValidationError("GL weight count must be non-negative");
    }
    w_.resize(static_cast<std::size_t>(n) + 1);
    w_[0] = 1.0;
    for (int k = 1; k <= n; ++k) {
        // (1 - (alpha + 1) / k) rearranged so that w_1 = -alpha holds exactly.
        w_[k] = w_[k - 1] * ((k - 1.0) - alpha) / k;
    }
    support_ = w_.size();
    while (support_ > 1 && w_[support_ - 1] == 0.0) --support_;
}

GLWeights gl_weights(double alpha, int n) { return GLWeights(alpha, n); }

ScalarGrid frac_dx_minus(const ScalarGrid& f, const GLWeights& w) {
    return apply_x(f, w, line_minus, "frac_dx_minus");
}

ScalarGrid frac_dx_plus(const ScalarGrid& f, const GLWeights& w) {
    return apply_x(f, w, line_plus, "frac_dx_plus");
}

ScalarGrid frac_dy_minus(const ScalarGrid& f, const GLWeights& w) {
    return apply_y(f, w, line_minus, "frac_dy_minus");
}

ScalarGrid frac_dy_plus(const ScalarGrid& f, const GLWeights& w) {
    return apply_y(f, w, line_plus, "frac_dy_plus");
}

std::pair<ScalarGrid, ScalarGrid> frac_grad(const ScalarGrid& f, const GLWeights& w) {
    return {frac_dx_minus(f, w), frac_dy_minus(f, w)};
}

ScalarGrid frac_compose_xx(const ScalarGrid& f, const GLWeights& w) {
    return frac_dx_plus(frac_dx_minus(f, w), w);
}

ScalarGrid frac_compose_yy(const ScalarGrid& f, const GLWeights& w) {
    return frac_dy_plus(frac_dy_minus(f, w), w);
}

ScalarGrid frac_compose_diagonal(int width, int height, const GLWeights& w) {
    ScalarGrid diag(width, height);
    require_weights(diag, w, std::max(width, height), "frac_compose_diagonal");
    const auto px = squared_prefix_sums(w, width);
    const auto py = squared_prefix_sums(w, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            diag(x, y) = px[width - 1 - x] + py[height - 1 - y];
        }
    }
    return diag;
}

}  // namespace fracflow
