#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gazereg/errors.hpp"

namespace gazereg {

/// 8-bit grayscale image, row-major. Color inputs are converted on load with
/// Y = 0.299 R + 0.587 G + 0.114 B, rounded to nearest.
struct ImageGray {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    ImageGray() = default;
    ImageGray(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

    bool operator==(const ImageGray&) const = default;
};

namespace image_io {

/// Loads a PGM (P5) or PNG file, dispatching on the magic bytes.
/// PNG support covers 8-bit gray, gray+alpha, RGB and RGBA, non-interlaced.
/// Throws UnreadableImage on anything else.
ImageGray load_image(const std::string& path);

/// Writes an 8-bit grayscale PNG (color type 0). Deterministic byte stream
/// for identical input.
void save_png(const ImageGray& img, const std::string& path);

/// Writes a binary PGM (P5), maxval 255.
void save_pgm(const ImageGray& img, const std::string& path);

} // namespace image_io
} // namespace gazereg
