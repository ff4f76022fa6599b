#include "fracflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fracflow {

Plane::Plane(int width, int height, double fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) {
        throw ValidationError("plane dimensions must be non-negative");
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Plane::Plane(int width, int height, std::vector<double> values)
    : width_(width), height_(height), data_(std::move(values)) {
    if (width < 0 || height < 0 ||
        data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ValidationError("plane data length does not match width * height");
    }
}

VectorField::VectorField(Plane px, Plane py) : x(std::move(px)), y(std::move(py)) {
    if (!x.same_shape(y)) {
        throw ValidationError("vector field components differ in shape");
    }
}

bool all_finite(const Plane& p) noexcept {
    return std::all_of(p.values().begin(), p.values().end(),
                       [](double v) { return std::isfinite(v); });
}

bool all_finite(const VectorField& f) noexcept { return all_finite(f.x) && all_finite(f.y); }

void require_same_shape(const Plane& a, const Plane& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ValidationError(std::string(what) + ": dimension mismatch (" +
                              std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                              " vs " + std::to_string(b.width()) + "x" +
                              std::to_string(b.height()) + ")");
    }
}

}  // namespace fracflow
