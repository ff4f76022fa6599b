#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>

#include "fracflow/grid.hpp"
#include "fracflow/image_io.hpp"
#include "fracflow/solver.hpp"

namespace fracflow {

// Ground-truth components above this magnitude mark unknown flow (Middlebury).
inline constexpr double kUnknownFlowThreshold = 1e9;
inline constexpr float kFloMagic = 202021.25f;

struct FlowMetrics {
    double aae = 0.0;      // mean angular error, radians
    double aae_deg = 0.0;  // mean angular error, degrees
    double sdae = 0.0;     // population standard deviation of the angular error, radians
    double aepe = 0.0;     // mean endpoint error, pixels
    std::size_t n_valid = 0;
};

// Inclusive pixel rectangle [x0, x1] x [y0, y1].
struct RegionSpec {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    [[nodiscard]] std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(x1 - x0 + 1) * static_cast<std::size_t>(y1 - y0 + 1);
    }
    // Throws ValidationError unless 0 <= x0 <= x1 < width and 0 <= y0 <= y1 < height.
    void validate(int width, int height) const;
    bool operator==(const RegionSpec&) const = default;
};

// Angle between (u1, u2, 1) and (gt1, gt2, 1), radians.
[[nodiscard]] double angular_error(Vec2 u, Vec2 gt) noexcept;
[[nodiscard]] double endpoint_error(Vec2 u, Vec2 gt) noexcept;

[[nodiscard]] bool is_unknown_flow(double u1, double u2) noexcept;

// Throws ValidationError when no ground-truth pixel in the region is known.
[[nodiscard]] FlowMetrics aggregate_metrics(const VectorField& flow, const VectorField& gt,
                                            const std::optional<RegionSpec>& region = {});

// Middlebury .flo: float magic 202021.25, int32 width, int32 height, then row-major
// interleaved (u1, u2) float32, all little-endian.
[[nodiscard]] VectorField read_flo(const std::filesystem::path& path);
void write_flo(const std::filesystem::path& path, const VectorField& flow);

// Middlebury color-wheel rendering. Saturation scales with |u| / max_motion; when
// max_motion is absent (or not positive) the 99th-percentile magnitude of the known
// pixels is used. Unknown pixels are black.
[[nodiscard]] RgbImage flow_to_color(const VectorField& flow,
                                     std::optional<double> max_motion = {});

}  // namespace fracflow
