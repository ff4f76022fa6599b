#include "fracflow/eval.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

namespace fracflow {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

// Middlebury color wheel, 55 hues: red-yellow-green-cyan-blue-magenta.
std::vector<std::array<double, 3>> make_color_wheel() {
    constexpr int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
    std::vector<std::array<double, 3>> wheel;
    for (int i = 0; i < RY; ++i) wheel.push_back({255, 255.0 * i / RY, 0});
    for (int i = 0; i < YG; ++i) wheel.push_back({255 - 255.0 * i / YG, 255, 0});
    for (int i = 0; i < GC; ++i) wheel.push_back({0, 255, 255.0 * i / GC});
    for (int i = 0; i < CB; ++i) wheel.push_back({0, 255 - 255.0 * i / CB, 255});
    for (int i = 0; i < BM; ++i) wheel.push_back({255.0 * i / BM, 0, 255});
    for (int i = 0; i < MR; ++i) wheel.push_back({255, 0, 255 - 255.0 * i / MR});
    return wheel;
}

void compute_color(double fx, double fy, const std::vector<std::array<double, 3>>& wheel,
                   std::uint8_t* rgb) {
    const int ncols = static_cast<int>(wheel.size());
    const double rad = std::hypot(fx, fy);
    const double a = std::atan2(-fy, -fx) / std::numbers::pi;
    const double fk = (a + 1.0) / 2.0 * (ncols - 1);
    const int k0 = static_cast<int>(fk);
    const int k1 = (k0 + 1) % ncols;
    const double f = fk - k0;
    for (int c = 0; c < 3; ++c) {
        double col = ((1.0 - f) * wheel[k0][c] + f * wheel[k1][c]) / 255.0;
        if (rad <= 1.0) {
            col = 1.0 - rad * (1.0 - col);
        } else {
            col *= 0.75;
        }
        rgb[c] = static_cast<std::uint8_t>(std::clamp(255.0 * col, 0.0, 255.0));
    }
}

}  // namespace

void RegionSpec::validate(int width, int height) const {
    if (x0 < 0 || y0 < 0 || x0 > x1 || y0 > y1 || x1 >= width || y1 >= height) {
        throw ValidationError("region [" + std::to_string(x0) + "," + std::to_string(y0) + "," +
                              std::to_string(x1) + "," + std::to_string(y1) +
                              "] is outside the " + std::to_string(width) + "x" +
                              std::to_string(height) + " image");
    }
}

double angular_error(Vec2 u, Vec2 gt) noexcept {
    // Same angle as arccos of the normalized dot product of (u, 1) and (gt, 1), taken
    // through atan2 so that equal vectors give exactly zero.
    const double dot = 1.0 + u.x * gt.x + u.y * gt.y;
    const double cx = u.y - gt.y;
    const double cy = gt.x - u.x;
    const double cz = u.x * gt.y - u.y * gt.x;
    return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
}

double endpoint_error(Vec2 u, Vec2 gt) noexcept { return std::hypot(u.x - gt.x, u.y - gt.y); }

bool is_unknown_flow(double u1, double u2) noexcept {
    return !(std::abs(u1) <= kUnknownFlowThreshold) || !(std::abs(u2) <= kUnknownFlowThreshold);
}

FlowMetrics aggregate_metrics(const VectorField& flow, const VectorField& gt,
                              const std::optional<RegionSpec>& region) {
    require_same_shape(flow.x, gt.x, "aggregate_metrics");
    const RegionSpec r = region.value_or(RegionSpec{0, 0, flow.width() - 1, flow.height() - 1});
    r.validate(flow.width(), flow.height());

    std::vector<double> ae;
    double epe_sum = 0.0;
    for (int y = r.y0; y <= r.y1; ++y) {
        for (int x = r.x0; x <= r.x1; ++x) {
            if (is_unknown_flow(gt.x(x, y), gt.y(x, y))) continue;
            const Vec2 u{flow.x(x, y), flow.y(x, y)};
            const Vec2 g{gt.x(x, y), gt.y(x, y)};
            ae.push_back(angular_error(u, g));
            epe_sum += endpoint_error(u, g);
        }
    }
    if (ae.empty()) {
        throw ValidationError("empty valid set: no known ground-truth pixels in region");
    }
    const double n = static_cast<double>(ae.size());
    double ae_sum = 0.0;
    for (double a : ae) ae_sum += a;
    const double mean = ae_sum / n;
    double var = 0.0;
    for (double a : ae) var += (a - mean) * (a - mean);

    FlowMetrics m;
    m.aae = mean;
    m.aae_deg = mean * 180.0 / std::numbers::pi;
    m.sdae = std::sqrt(var / n);
    m.aepe = epe_sum / n;
    m.n_valid = ae.size();
    return m;
}

VectorField read_flo(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open flow file: " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 12) {
        throw IoError("truncated flow file header: " + path.string());
    }
    if (get_f32(bytes.data()) != kFloMagic) {
        throw IoError("bad magic in flow file: " + path.string());
    }
    const auto w = static_cast<std::int32_t>(get_u32(bytes.data() + 4));
    const auto h = static_cast<std::int32_t>(get_u32(bytes.data() + 8));
    constexpr std::int64_t kMaxPixels = std::int64_t{1} << 28;
    if (w <= 0 || h <= 0 || static_cast<std::int64_t>(w) * h > kMaxPixels) {
        throw IoError("flow file dimension overflow (" + std::to_string(w) + "x" +
                      std::to_string(h) + "): " + path.string());
    }
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() < 12 + 8 * n) {
        throw IoError("truncated flow payload: " + path.string());
    }
    VectorField f(w, h);
    const std::uint8_t* p = bytes.data() + 12;
    for (std::size_t i = 0; i < n; ++i) {
        f.x.values()[i] = get_f32(p + 8 * i);
        f.y.values()[i] = get_f32(p + 8 * i + 4);
    }
    return f;
}

void write_flo(const std::filesystem::path& path, const VectorField& flow) {
    if (flow.width() <= 0 || flow.height() <= 0) {
        throw ValidationError("cannot write an empty flow field");
    }
    std::vector<std::uint8_t> bytes;
    bytes.reserve(12 + 8 * flow.size());
    put_f32(bytes, kFloMagic);
    put_u32(bytes, static_cast<std::uint32_t>(flow.width()));
    put_u32(bytes, static_cast<std::uint32_t>(flow.height()));
    for (std::size_t i = 0; i < flow.size(); ++i) {
        put_f32(bytes, static_cast<float>(flow.x.values()[i]));
        put_f32(bytes, static_cast<float>(flow.y.values()[i]));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write flow file: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing flow file: " + path.string());
    }
}

RgbImage flow_to_color(const VectorField& flow, std::optional<double> max_motion) {
    double scale = max_motion.value_or(0.0);
    if (!(scale > 0.0)) {
        std::vector<double> mags;
        mags.reserve(flow.size());
        for (std::size_t i = 0; i < flow.size(); ++i) {
            const double u = flow.x.values()[i];
            const double v = flow.y.values()[i];
            if (!is_unknown_flow(u, v)) mags.push_back(std::hypot(u, v));
        }
        scale = 0.0;
        if (!mags.empty()) {
            const auto k = static_cast<std::size_t>(0.99 * static_cast<double>(mags.size() - 1));
            std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k),
                             mags.end());
            scale = mags[k];
        }
        if (!(scale > 0.0)) scale = 1.0;
    }

    const auto wheel = make_color_wheel();
    RgbImage img(flow.width(), flow.height());
    for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) {
            const double u = flow.x(x, y);
            const double v = flow.y(x, y);
            std::uint8_t* px = img.pixel(x, y);
            if (is_unknown_flow(u, v)) {
                px[0] = px[1] = px[2] = 0;
                continue;
            }
            compute_color(u / scale, v / scale, wheel, px);
        }
    }
    return img;
}

}  // namespace fracflow
