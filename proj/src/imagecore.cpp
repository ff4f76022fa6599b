#include "fracflow/imagecore.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace fracflow {
namespace {

// Half-sample symmetric reflection: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
int mirror_index(int i, int n) noexcept {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(radius) + 1);
    double sum = 0.0;
    for (int i = 0; i <= radius; ++i) {
        k[i] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += i == 0 ? k[i] : 2.0 * k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
}

std::array<double, 4> catmull_rom_weights(double t) noexcept {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return {0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t), 0.5 * (t3 - t2)};
}

Plane resample(const Plane& img, int out_w, int out_h, double step) {
    Plane out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            out(x, y) = bicubic_sample(img, x * step, y * step);
        }
    }
    return out;
}

}  // namespace

Plane gaussian_convolve(const Plane& img, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ValidationError("gaussian sigma must be positive, got " + std::to_string(sigma));
    }
    const auto k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size()) - 1;
    const int w = img.width();
    const int h = img.height();

    Plane tmp(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = k[0] * img(x, y);
            for (int r = 1; r <= radius; ++r) {
                acc += k[r] * (img(mirror_index(x - r, w), y) + img(mirror_index(x + r, w), y));
            }
            tmp(x, y) = acc;
        }
    }
    Plane out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = k[0] * tmp(x, y);
            for (int r = 1; r <= radius; ++r) {
                acc += k[r] * (tmp(x, mirror_index(y - r, h)) + tmp(x, mirror_index(y + r, h)));
            }
            out(x, y) = acc;
        }
    }
    return out;
}

double bicubic_sample(const Plane& img, double x, double y) noexcept {
    const int w = img.width();
    const int h = img.height();
    // Far-away coordinates collapse onto the border anyway; bounding them keeps the
    // integer conversion well defined.
    x = std::fmin(std::fmax(x, -2.0), w + 1.0);
    y = std::fmin(std::fmax(y, -2.0), h + 1.0);
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const int ix = static_cast<int>(fx);
    const int iy = static_cast<int>(fy);
    const auto wx = catmull_rom_weights(x - fx);
    const auto wy = catmull_rom_weights(y - fy);

    std::array<int, 4> cols;
    for (int k = 0; k < 4; ++k) cols[k] = std::clamp(ix - 1 + k, 0, w - 1);

    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
        const int row = std::clamp(iy - 1 + j, 0, h - 1);
        double line = 0.0;
        for (int k = 0; k < 4; ++k) line += wx[k] * img(cols[k], row);
        acc += wy[j] * line;
    }
    return acc;
}

Plane warp_image(const Plane& img, const VectorField& flow) {
    require_same_shape(img, flow.x, "warp_image");
    Plane out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            out(x, y) = bicubic_sample(img, x + flow.x(x, y), y + flow.y(x, y));
        }
    }
    return out;
}

VectorField central_gradient(const Plane& img) {
    const int w = img.width();
    const int h = img.height();
    if (w < 1 || h < 1 || (w < 2 && h < 2)) {
        throw ValidationError("central_gradient needs at least two pixels along one axis");
    }
    VectorField g(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            g.x(x, y) = 0.5 * (img(x + 1, y) - img(x - 1, y));
        }
    }
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 0; x < w; ++x) {
            g.y(x, y) = 0.5 * (img(x, y + 1) - img(x, y - 1));
        }
    }
    return g;
}

double downsample_sigma(double eta) {
    return kPresmoothSigma * std::sqrt(1.0 / (eta * eta) - 1.0);
}

int scaled_dim(int n, double eta) {
    // The small slack absorbs rounding in eta * n (e.g. 0.8 * 50).
    return std::max(1, static_cast<int>(std::ceil(eta * n - 1e-9)));
}

Plane downsample(const Plane& img, double eta) {
    if (!(eta > 0.0 && eta < 1.0)) {
        throw ValidationError("eta must be in (0,1), got " + std::to_string(eta));
    }
    const Plane blurred = gaussian_convolve(img, downsample_sigma(eta));
    return resample(blurred, scaled_dim(img.width(), eta), scaled_dim(img.height(), eta),
                    1.0 / eta);
}

int effective_scales(int width, int height, double eta, int n_scales) {
    if (n_scales < 1) {
        throw ValidationError("n_scales must be >= 1, got " + std::to_string(n_scales));
    }
    int levels = 1;
    int w = width;
    int h = height;
    while (levels < n_scales) {
        w = scaled_dim(w, eta);
        h = scaled_dim(h, eta);
        if (w < kMinPyramidDim || h < kMinPyramidDim) break;
        ++levels;
    }
    return levels;
}

std::vector<Plane> build_pyramid(const Plane& img, double eta, int n_scales) {
    if (!(eta > 0.0 && eta < 1.0)) {
        throw ValidationError("eta must be in (0,1), got " + std::to_string(eta));
    }
    const int levels = effective_scales(img.width(), img.height(), eta, n_scales);
    std::vector<Plane> pyramid;
    pyramid.reserve(static_cast<std::size_t>(levels));
    pyramid.push_back(gaussian_convolve(img, kPresmoothSigma));
    for (int s = 1; s < levels; ++s) {
        pyramid.push_back(downsample(pyramid.back(), eta));
    }
    return pyramid;
}

VectorField upsample_flow(const VectorField& flow, double eta, int target_w, int target_h) {
    if (!(eta > 0.0 && eta < 1.0)) {
        throw ValidationError("eta must be in (0,1), got " + std::to_string(eta));
    }
    if (scaled_dim(target_w, eta) != flow.width() || scaled_dim(target_h, eta) != flow.height()) {
        throw ValidationError("upsample_flow: target " + std::to_string(target_w) + "x" +
                              std::to_string(target_h) + " is not the finer level of a " +
                              std::to_string(flow.width()) + "x" +
                              std::to_string(flow.height()) + " field");
    }
    VectorField out(resample(flow.x, target_w, target_h, eta),
                    resample(flow.y, target_w, target_h, eta));
    for (Plane* p : {&out.x, &out.y}) {
        for (auto& v : p->values()) v /= eta;
    }
    return out;
}

}  // namespace fracflow
