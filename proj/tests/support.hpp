#pragma once

// Synthetic-image fixtures shared by the test suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "gazereg/geometry.hpp"
#include "gazereg/image.hpp"

namespace testsupport {

using gazereg::ImageGray;
using gazereg::Point2;
using gazereg::geometry::Homography33;

struct Rng {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double unit() { return static_cast<double>(next() >> 11) * 0x1p-53; }
};

inline ImageGray checkerboard(int size, int square) {
    ImageGray img(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            img.at(x, y) = ((x / square + y / square) % 2 == 0) ? 0 : 255;
    return img;
}

inline ImageGray noise_image(int w, int h, std::uint64_t seed) {
    ImageGray img(w, h);
    Rng rng{seed};
    for (auto& p : img.pixels)
        p = static_cast<std::uint8_t>(rng.next() & 0xff);
    return img;
}

// Checkerboard whose cells carry distinct shades (neighbors at least 60
// levels apart) plus per-pixel Gaussian noise. A strict two-tone board makes
// all same-polarity corners locally identical, which no descriptor can tell
// apart; distinct shades keep the corners sharp and identifiable.
inline ImageGray textured_board(int size, int square, double sigma, std::uint64_t seed) {
    ImageGray img(size, size);
    Rng rng{seed};
    const int cells = (size + square - 1) / square;
    std::vector<std::uint8_t> shade(static_cast<std::size_t>(cells) * cells);
    for (int cy = 0; cy < cells; ++cy)
        for (int cx = 0; cx < cells; ++cx) {
            int s;
            for (;;) {
                s = static_cast<int>(rng.next() % 256);
                if (cx > 0 && std::abs(s - shade[cy * cells + cx - 1]) < 60) continue;
                if (cy > 0 && std::abs(s - shade[(cy - 1) * cells + cx]) < 60) continue;
                break;
            }
            shade[cy * cells + cx] = static_cast<std::uint8_t>(s);
        }
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            img.at(x, y) = shade[(y / square) * cells + (x / square)];
    for (auto& p : img.pixels) {
        const double u1 = std::max(rng.unit(), 1e-300);
        const double u2 = rng.unit();
        const double g = sigma * std::sqrt(-2.0 * std::log(u1)) *
                         std::cos(2.0 * std::numbers::pi * u2);
        p = static_cast<std::uint8_t>(std::clamp(std::lround(p + g), 0l, 255l));
    }
    return img;
}

// Render dst(p) = src(h^-1 p) with bilinear sampling; outside-of-source reads 0.
inline ImageGray warp_image(const ImageGray& src, const Homography33& h) {
    const Homography33 hinv = h.inverse();
    ImageGray out(src.width, src.height);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const Point2 p = gazereg::geometry::transform_point(hinv, Point2(x, y));
            const double fx = p.x(), fy = p.y();
            if (fx < 0 || fy < 0 || fx > src.width - 1 || fy > src.height - 1) {
                out.at(x, y) = 0;
                continue;
            }
            const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const int y1 = std::min(y0 + 1, src.height - 1);
            const double wx = fx - x0, wy = fy - y0;
            const double v = (1 - wy) * ((1 - wx) * src.at(x0, y0) + wx * src.at(x1, y0)) +
                             wy * ((1 - wx) * src.at(x0, y1) + wx * src.at(x1, y1));
            out.at(x, y) = static_cast<std::uint8_t>(std::lround(v));
        }
    }
    return out;
}

inline Homography33 rotation_about(double cx, double cy, double theta) {
    Eigen::Matrix3d r;
    r << std::cos(theta), -std::sin(theta), cx - cx * std::cos(theta) + cy * std::sin(theta),
         std::sin(theta),  std::cos(theta), cy - cx * std::sin(theta) - cy * std::cos(theta),
         0, 0, 1;
    return Homography33(r);
}

} // namespace testsupport
