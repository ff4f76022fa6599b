#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fracflow/errors.hpp"

namespace fracflow {

// Dense row-major plane of doubles. Pixel (x, y) lives at data[y * width + x].
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, double fill = 0.0);
    Plane(int width, int height, std::vector<double> values);

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] double& operator()(int x, int y) noexcept {
        return data_[static_cast<std::size_t>(y) * width_ + x];
    }
    [[nodiscard]] double operator()(int x, int y) const noexcept {
        return data_[static_cast<std::size_t>(y) * width_ + x];
    }

    [[nodiscard]] std::span<double> values() noexcept { return data_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

    [[nodiscard]] bool same_shape(const Plane& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    bool operator==(const Plane&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

// Intensity image, nominally in [0, 255] after normalization.
using GrayImage = Plane;
// Generic scalar field on the pixel grid (flow components, split variables).
using ScalarGrid = Plane;

// Two-component field on the pixel grid: flow (u1, u2) or image gradients.
struct VectorField {
    Plane x;
    Plane y;

    VectorField() = default;
    VectorField(int width, int height, double fx = 0.0, double fy = 0.0)
        : x(width, height, fx), y(width, height, fy) {}
    VectorField(Plane px, Plane py);

    [[nodiscard]] int width() const noexcept { return x.width(); }
    [[nodiscard]] int height() const noexcept { return x.height(); }
    [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
    [[nodiscard]] bool same_shape(const VectorField& other) const noexcept {
        return x.same_shape(other.x);
    }
    [[nodiscard]] bool same_shape(const Plane& other) const noexcept {
        return x.same_shape(other);
    }

    bool operator==(const VectorField&) const = default;
};

[[nodiscard]] bool all_finite(const Plane& p) noexcept;
[[nodiscard]] bool all_finite(const VectorField& f) noexcept;

void require_same_shape(const Plane& a, const Plane& b, const char* what);

}  // namespace fracflow
