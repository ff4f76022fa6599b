#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fracflow/grid.hpp"

namespace fracflow {

// 8-bit interleaved RGB raster, used for flow visualization output.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // size 3 * width * height

    RgbImage() = default;
    RgbImage(int w, int h)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

    [[nodiscard]] std::uint8_t* pixel(int x, int y) noexcept {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    [[nodiscard]] const std::uint8_t* pixel(int x, int y) const noexcept {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }

    bool operator==(const RgbImage&) const = default;
};

// Reads a PGM (P2/P5, 8 or 16 bit) or PNG file into raw intensities.
// Color inputs are reduced to luma (0.299 R + 0.587 G + 0.114 B); alpha is dropped.
[[nodiscard]] GrayImage read_image(const std::filesystem::path& path);

// Linear rescale so that min -> 0 and max -> 255. Constant images map to zero.
[[nodiscard]] GrayImage normalize_intensity(const GrayImage& img);

// Rescales both images with their joint min/max, keeping relative brightness.
void normalize_jointly(GrayImage& a, GrayImage& b);

// read_image followed by normalize_intensity.
[[nodiscard]] GrayImage load_image(const std::filesystem::path& path);

// Writes intensities rounded and clamped to [0, 255]. Format follows the extension
// (.png, otherwise binary PGM).
void save_image(const std::filesystem::path& path, const GrayImage& img);

void write_png(const std::filesystem::path& path, const RgbImage& img);

}  // namespace fracflow
