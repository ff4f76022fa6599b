#include "fracflow/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace fracflow {
namespace {

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

// Skips whitespace and '#' comments in a PNM header.
void skip_pnm_space(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (c != EOF && std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

long read_pnm_int(std::istream& in, const std::filesystem::path& path) {
    skip_pnm_space(in);
    long v = -1;
    if (!(in >> v) || v < 0) {
        throw IoError("malformed PGM header: " + path.string());
    }
    return v;
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open image: " + path.string());
    }
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5')) {
        throw IoError("unsupported image format (expected P2/P5 PGM): " + path.string());
    }
    const bool binary = magic[1] == '5';
    const long w = read_pnm_int(in, path);
    const long h = read_pnm_int(in, path);
    const long maxval = read_pnm_int(in, path);
    if (w == 0 || h == 0) {
        throw IoError("zero-dimension image: " + path.string());
    }
    if (maxval == 0 || maxval > 65535 || w > (1L << 20) || h > (1L << 20)) {
        throw IoError("unsupported PGM header values: " + path.string());
    }
    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    auto px = img.values();
    if (binary) {
        in.get();  // single whitespace after maxval
        const std::size_t bytes = maxval < 256 ? 1 : 2;
        std::vector<unsigned char> raw(px.size() * bytes);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
            throw IoError("truncated PGM payload: " + path.string());
        }
        for (std::size_t i = 0; i < px.size(); ++i) {
            px[i] = bytes == 1 ? raw[i] : static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]);
        }
    } else {
        for (auto& v : px) {
            long s = read_pnm_int(in, path);
            v = static_cast<double>(s);
        }
    }
    return img;
}

GrayImage read_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw IoError("cannot read PNG '" + path.string() + "': " + image.message);
    }
    if (image.width == 0 || image.height == 0) {
        png_image_free(&image);
        throw IoError("zero-dimension image: " + path.string());
    }
    const bool has_color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = has_color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int channels = has_color ? 3 : 1;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("corrupt PNG '" + path.string() + "': " + msg);
    }
    GrayImage img(static_cast<int>(image.width), static_cast<int>(image.height));
    auto px = img.values();
    for (std::size_t i = 0; i < px.size(); ++i) {
        const std::uint8_t* s = buffer.data() + i * channels;
        px[i] = has_color ? luma(s[0], s[1], s[2]) : s[0];
    }
    return img;
}

std::uint8_t to_byte(double v) {
    if (!std::isfinite(v)) return 0;
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void write_png_raw(const std::filesystem::path& path, int width, int height, bool color,
                   const std::uint8_t* data) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
        throw IoError("cannot write PNG '" + path.string() + "': " + image.message);
    }
}

}  // namespace

GrayImage read_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw IoError("image file not found: " + path.string());
    }
    const std::string ext = lower_extension(path);
    if (ext == ".png") {
        return read_png(path);
    }
    if (ext == ".pgm" || ext == ".pnm") {
        return read_pgm(path);
    }
    throw IoError("unsupported image format '" + ext + "': " + path.string());
}

GrayImage normalize_intensity(const GrayImage& img) {
    GrayImage out = img;
    auto v = out.values();
    if (v.empty()) return out;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double mn = *lo;
    const double range = *hi - mn;
    for (auto& p : v) {
        p = range > 0.0 ? (p - mn) * 255.0 / range : 0.0;
    }
    return out;
}

void normalize_jointly(GrayImage& a, GrayImage& b) {
    if (a.empty() || b.empty()) return;
    const auto [alo, ahi] = std::minmax_element(a.values().begin(), a.values().end());
    const auto [blo, bhi] = std::minmax_element(b.values().begin(), b.values().end());
    const double mn = std::min(*alo, *blo);
    const double range = std::max(*ahi, *bhi) - mn;
    for (GrayImage* img : {&a, &b}) {
        for (auto& p : img->values()) {
            p = range > 0.0 ? (p - mn) * 255.0 / range : 0.0;
        }
    }
}

GrayImage load_image(const std::filesystem::path& path) {
    return normalize_intensity(read_image(path));
}

void save_image(const std::filesystem::path& path, const GrayImage& img) {
    if (img.empty()) {
        throw ValidationError("cannot save an empty image");
    }
    std::vector<std::uint8_t> bytes(img.size());
    std::transform(img.values().begin(), img.values().end(), bytes.begin(), to_byte);
    if (lower_extension(path) == ".png") {
        write_png_raw(path, img.width(), img.height(), false, bytes.data());
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write image: " + path.string());
    }
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing image: " + path.string());
    }
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
    if (img.width <= 0 || img.height <= 0 ||
        img.data.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
        throw ValidationError("malformed RGB image");
    }
    write_png_raw(path, img.width, img.height, true, img.data.data());
}

}  // namespace fracflow
