#include "gazereg/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gazereg::features {

namespace {

// Border margin (level pixels) inside which no keypoint is produced: the
// orientation disc (radius 15) and the steered, smoothed descriptor tests
// (radius 13 + blur 2) must stay inside the level image.
constexpr int kMargin = 16;
constexpr int kOrientationRadius = 15;
constexpr int kTestRadius = 12;

struct SplitMix64 {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t limit =
            std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do { v = next(); } while (v >= limit);
        return v % n;
    }
};

struct TestPair {
    int px, py, qx, qy;
};

// Fixed comparison pattern: 256 point pairs drawn once from a seeded
// generator, every point inside the disc of radius ~12.5.
const std::array<TestPair, 256>& test_pattern() {
    static const std::array<TestPair, 256> pattern = [] {
        std::array<TestPair, 256> pat{};
        SplitMix64 rng{0x5eedf00dcafe1234ULL};
        auto draw_point = [&](int& x, int& y) {
            do {
                x = static_cast<int>(rng.bounded(2 * kTestRadius + 1)) - kTestRadius;
                y = static_cast<int>(rng.bounded(2 * kTestRadius + 1)) - kTestRadius;
            } while (x * x + y * y > kTestRadius * kTestRadius + 12);
        };
        for (auto& t : pat) {
            do {
                draw_point(t.px, t.py);
                draw_point(t.qx, t.qy);
            } while (t.px == t.qx && t.py == t.qy);
        }
        return pat;
    }();
    return pattern;
}

struct FloatImage {
    int width = 0, height = 0;
    std::vector<float> data;

    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

// 5x5 box mean, borders clamped by shrinking the window.
FloatImage box_mean5(const FloatImage& src) {
    // Running-sum integral image, (w+1)x(h+1).
    const int w = src.width, h = src.height;
    std::vector<double> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    for (int y = 0; y < h; ++y) {
        double row = 0.0;
        for (int x = 0; x < w; ++x) {
            row += src.at(x, y);
            integral[static_cast<std::size_t>(y + 1) * (w + 1) + (x + 1)] =
                integral[static_cast<std::size_t>(y) * (w + 1) + (x + 1)] + row;
        }
    }
    auto rect_sum = [&](int x0, int y0, int x1, int y1) {
        return integral[static_cast<std::size_t>(y1) * (w + 1) + x1] -
               integral[static_cast<std::size_t>(y0) * (w + 1) + x1] -
               integral[static_cast<std::size_t>(y1) * (w + 1) + x0] +
               integral[static_cast<std::size_t>(y0) * (w + 1) + x0];
    };
    FloatImage out;
    out.width = w;
    out.height = h;
    out.data.resize(src.data.size());
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - 2), y1 = std::min(h, y + 3);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - 2), x1 = std::min(w, x + 3);
            out.at(x, y) = static_cast<float>(rect_sum(x0, y0, x1, y1) /
                                              ((x1 - x0) * (y1 - y0)));
        }
    }
    return out;
}

FloatImage to_float(const ImageGray& img) {
    FloatImage f;
    f.width = img.width;
    f.height = img.height;
    f.data.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        f.data[i] = static_cast<float>(img.pixels[i]) / 255.0f;
    return f;
}

// Separable Gaussian, sigma 1.4, radius 4, clamped borders. Descriptors and
// responses are built on this rather than a box mean: the Gaussian is
// isotropic, so the smoothed field commutes with image rotation and two
// detections of the same physical point see the same neighborhood.
FloatImage gaussian_blur(const FloatImage& src) {
    static const std::array<double, 9> kernel = [] {
        std::array<double, 9> k{};
        const double sigma = 1.4;
        double sum = 0.0;
        for (int i = -4; i <= 4; ++i) {
            k[i + 4] = std::exp(-0.5 * i * i / (sigma * sigma));
            sum += k[i + 4];
        }
        for (double& v : k) v /= sum;
        return k;
    }();

    const int w = src.width, h = src.height;
    FloatImage tmp, out;
    for (FloatImage* f : {&tmp, &out}) {
        f->width = w;
        f->height = h;
        f->data.assign(static_cast<std::size_t>(w) * h, 0.0f);
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -4; i <= 4; ++i)
                acc += kernel[i + 4] * src.at(std::clamp(x + i, 0, w - 1), y);
            tmp.at(x, y) = static_cast<float>(acc);
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -4; i <= 4; ++i)
                acc += kernel[i + 4] * tmp.at(x, std::clamp(y + i, 0, h - 1));
            out.at(x, y) = static_cast<float>(acc);
        }
    }
    return out;
}

// Min-eigenvalue of the 5x5-averaged structure tensor (Sobel gradients over
// smoothed intensities in [0,1]). Edges score near zero, corners of either
// the L or the saddle kind score high. Expects a pre-smoothed image so that
// the response peaks on the corner itself rather than beside it.
FloatImage corner_response(const FloatImage& img) {
    const int w = img.width, h = img.height;
    FloatImage gx2, gy2, gxy;
    for (FloatImage* f : {&gx2, &gy2, &gxy}) {
        f->width = w;
        f->height = h;
        f->data.assign(static_cast<std::size_t>(w) * h, 0.0f);
    }
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            const float gx = (img.at(x + 1, y - 1) + 2 * img.at(x + 1, y) + img.at(x + 1, y + 1) -
                              img.at(x - 1, y - 1) - 2 * img.at(x - 1, y) - img.at(x - 1, y + 1)) / 8.0f;
            const float gy = (img.at(x - 1, y + 1) + 2 * img.at(x, y + 1) + img.at(x + 1, y + 1) -
                              img.at(x - 1, y - 1) - 2 * img.at(x, y - 1) - img.at(x + 1, y - 1)) / 8.0f;
            gx2.at(x, y) = gx * gx;
            gy2.at(x, y) = gy * gy;
            gxy.at(x, y) = gx * gy;
        }
    }
    const FloatImage sxx = box_mean5(gx2);
    const FloatImage syy = box_mean5(gy2);
    const FloatImage sxy = box_mean5(gxy);

    FloatImage r;
    r.width = w;
    r.height = h;
    r.data.assign(static_cast<std::size_t>(w) * h, 0.0f);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float a = sxx.at(x, y), b = syy.at(x, y), c = sxy.at(x, y);
            const float tr = a + b;
            const float det_term = std::sqrt((a - b) * (a - b) + 4 * c * c);
            r.at(x, y) = 0.5f * (tr - det_term);
        }
    }
    return r;
}

struct PatchOrientation {
    double angle = 0.0;       // reference angle in [0, 2*pi)
    double edge_coherence = 0.0; // ~1 when the gradient field is unidirectional
};

// Reference orientation from the fourth angular moment of the gradient
// field: sum of (gx + i*gy)^4 over the patch, angle divided back by four.
// Gradients along perpendicular edges (the checkerboard saddle case, where
// first- and second-order estimates cancel exactly) contribute coherently,
// so the estimate stays stable under subpixel shifts and resampling. The
// branch is (-45, 45] degrees; steering therefore tolerates rotations up to
// that magnitude, which covers this pipeline's working range.
//
// The second angular moment rides along as `edge_coherence`: near 1 the
// patch is a single ramp or straight edge. Steered comparisons on such a
// patch degenerate to sign(gradient . (p - q)), the same bit string for
// every ramp in every image, so callers must drop those points.
PatchOrientation gradient_orientation(const FloatImage& img, int cx, int cy) {
    double re = 0.0, im = 0.0;
    double re2 = 0.0, im2 = 0.0, energy = 0.0;
    for (int dy = -kOrientationRadius; dy <= kOrientationRadius; ++dy) {
        for (int dx = -kOrientationRadius; dx <= kOrientationRadius; ++dx) {
            if (dx * dx + dy * dy > kOrientationRadius * kOrientationRadius) continue;
            const int x = cx + dx, y = cy + dy;
            const double gx = (img.at(x + 1, y - 1) + 2 * img.at(x + 1, y) + img.at(x + 1, y + 1) -
                               img.at(x - 1, y - 1) - 2 * img.at(x - 1, y) - img.at(x - 1, y + 1)) / 8.0;
            const double gy = (img.at(x - 1, y + 1) + 2 * img.at(x, y + 1) + img.at(x + 1, y + 1) -
                               img.at(x - 1, y - 1) - 2 * img.at(x, y - 1) - img.at(x + 1, y - 1)) / 8.0;
            // (gx + i gy)^2 and its square expanded into real arithmetic
            const double a2 = gx * gx - gy * gy, b2 = 2.0 * gx * gy;
            re2 += a2;
            im2 += b2;
            energy += gx * gx + gy * gy;
            re += a2 * a2 - b2 * b2;
            im += 2.0 * a2 * b2;
        }
    }
    PatchOrientation out;
    if (energy > 0.0)
        out.edge_coherence = std::sqrt(re2 * re2 + im2 * im2) / energy;
    if (re == 0.0 && im == 0.0) return out;
    double angle = 0.25 * std::atan2(im, re); // in (-pi/4, pi/4]
    if (angle < 0) angle += 2.0 * std::numbers::pi;
    if (angle >= 2.0 * std::numbers::pi) angle = 0.0;
    out.angle = angle;
    return out;
}

Descriptor describe(const FloatImage& smoothed, double cx, double cy, double angle) {
    const double ca = std::cos(angle), sa = std::sin(angle);
    // Bilinear sampling at the steered offsets about the subpixel center;
    // rounding to the pixel grid here costs real matching robustness on
    // smooth edge ramps.
    auto rotated_sample = [&](int dx, int dy) {
        const double fx = cx + ca * dx - sa * dy;
        const double fy = cy + sa * dx + ca * dy;
        const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
        const double wx = fx - x0, wy = fy - y0;
        return (1 - wy) * ((1 - wx) * smoothed.at(x0, y0) + wx * smoothed.at(x0 + 1, y0)) +
               wy * ((1 - wx) * smoothed.at(x0, y0 + 1) + wx * smoothed.at(x0 + 1, y0 + 1));
    };
    Descriptor d;
    const auto& pattern = test_pattern();
    for (int k = 0; k < 256; ++k) {
        const auto& t = pattern[k];
        if (rotated_sample(t.px, t.py) < rotated_sample(t.qx, t.qy))
            d.bytes[k >> 3] |= static_cast<std::uint8_t>(1u << (k & 7));
    }
    return d;
}

// Parabolic peak interpolation along one axis of the 3x3 response
// neighborhood; returns the subpixel offset in [-0.5, 0.5].
double refine_axis(float r_minus, float r_center, float r_plus) {
    const double denom = static_cast<double>(r_minus) - 2.0 * r_center + r_plus;
    if (denom >= -1e-12) return 0.0; // flat or non-concave, keep the grid point
    const double t = 0.5 * (static_cast<double>(r_minus) - r_plus) / denom;
    return std::clamp(t, -0.5, 0.5);
}

} // namespace

ImageGray resize_bilinear(const ImageGray& img, int new_width, int new_height) {
    ImageGray out(new_width, new_height);
    const double sx = static_cast<double>(img.width) / new_width;
    const double sy = static_cast<double>(img.height) / new_height;
    for (int y = 0; y < new_height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < new_width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            const double v = (1 - wy) * ((1 - wx) * img.at(x0, y0) + wx * img.at(x1, y0)) +
                             wy * ((1 - wx) * img.at(x0, y1) + wx * img.at(x1, y1));
            out.at(x, y) = static_cast<std::uint8_t>(std::lround(v));
        }
    }
    return out;
}

FeatureList detect_and_describe(const ImageGray& img, const DetectParams& params) {
    if (img.width < 32 || img.height < 32)
        throw ImageTooSmall("detection needs at least 32x32, got " + std::to_string(img.width) +
                            "x" + std::to_string(img.height));

    FeatureList all;
    for (int level = 0; level < params.pyramid_levels; ++level) {
        const double scale = std::pow(params.scale_factor, level);
        const int lw = static_cast<int>(std::lround(img.width / scale));
        const int lh = static_cast<int>(std::lround(img.height / scale));
        if (lw < 2 * kMargin + 1 || lh < 2 * kMargin + 1)
            break;

        const ImageGray level_img = level == 0 ? img : resize_bilinear(img, lw, lh);
        const FloatImage f = to_float(level_img);
        // Detection runs on the box-smoothed image (its corner response has a
        // single central peak); descriptors sample the Gaussian-smoothed one,
        // whose isotropy keeps them stable under rotation.
        const FloatImage response = corner_response(box_mean5(f));
        const FloatImage smoothed = gaussian_blur(f);

        // sampling step from level pixels back to level-0 pixels
        const double step_x = static_cast<double>(img.width) / lw;
        const double step_y = static_cast<double>(img.height) / lh;

        for (int y = kMargin; y < lh - kMargin; ++y) {
            for (int x = kMargin; x < lw - kMargin; ++x) {
                const float r = response.at(x, y);
                if (r < params.threshold) continue;
                // Non-max suppression over the 8-neighborhood; on plateaus the
                // first pixel in scan order survives.
                bool is_max = true;
                for (int dy = -1; dy <= 1 && is_max; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const float rn = response.at(x + dx, y + dy);
                        const bool earlier = dy < 0 || (dy == 0 && dx < 0);
                        if (earlier ? rn >= r : rn > r) {
                            is_max = false;
                            break;
                        }
                    }
                }
                if (!is_max) continue;

                // Subpixel peak: the descriptor must be sampled about the
                // true corner, not the nearest grid point, or two detections
                // of the same corner drift apart by up to a pixel.
                const double sx = x + refine_axis(response.at(x - 1, y), r, response.at(x + 1, y));
                const double sy = y + refine_axis(response.at(x, y - 1), r, response.at(x, y + 1));

                const PatchOrientation ori = gradient_orientation(smoothed, x, y);
                if (ori.edge_coherence > 0.9) continue;

                Feature feat;
                feat.keypoint.position = Point2((sx + 0.5) * step_x - 0.5, (sy + 0.5) * step_y - 0.5);
                feat.keypoint.scale = std::max(step_x, step_y);
                feat.keypoint.orientation = ori.angle;
                feat.keypoint.response = r;
                feat.descriptor = describe(smoothed, sx, sy, ori.angle);
                all.push_back(std::move(feat));
            }
        }
    }

    std::sort(all.begin(), all.end(), [](const Feature& a, const Feature& b) {
        if (a.keypoint.response != b.keypoint.response)
            return a.keypoint.response > b.keypoint.response;
        if (a.keypoint.scale != b.keypoint.scale)
            return a.keypoint.scale < b.keypoint.scale;
        if (a.keypoint.position.y() != b.keypoint.position.y())
            return a.keypoint.position.y() < b.keypoint.position.y();
        return a.keypoint.position.x() < b.keypoint.position.x();
    });
    if (static_cast<int>(all.size()) > params.max_keypoints)
        all.resize(params.max_keypoints);
    return all;
}

std::vector<Correspondence> match_descriptors(const FeatureList& a, const FeatureList& b,
                                              double ratio) {
    std::vector<Correspondence> matches;
    if (a.empty() || b.empty()) return matches;

    constexpr double kInf = std::numeric_limits<double>::infinity();
    struct Nearest {
        double d1 = kInf, d2 = kInf;
        int idx = -1;
    };
    std::vector<Nearest> a_side(a.size()), b_side(b.size());

    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double d = hamming_distance(a[i].descriptor, b[j].descriptor);
            auto& na = a_side[i];
            if (d < na.d1) {
                na.d2 = na.d1;
                na.d1 = d;
                na.idx = static_cast<int>(j);
            } else if (d < na.d2) {
                na.d2 = d;
            }
            auto& nb = b_side[j];
            if (d < nb.d1) {
                nb.d2 = nb.d1;
                nb.d1 = d;
                nb.idx = static_cast<int>(i);
            } else if (d < nb.d2) {
                nb.d2 = d;
            }
        }
    }

    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& na = a_side[i];
        if (na.idx < 0) continue;
        const auto& nb = b_side[na.idx];
        if (nb.idx != static_cast<int>(i)) continue;          // mutual cross-check
        if (!(na.d1 < ratio * na.d2)) continue;               // ratio, a side
        if (!(nb.d1 < ratio * nb.d2)) continue;               // ratio, b side
        matches.push_back({a[i].keypoint.position, b[na.idx].keypoint.position,
                           static_cast<int>(na.d1)});
    }

    std::stable_sort(matches.begin(), matches.end(),
                     [](const Correspondence& l, const Correspondence& r) {
                         return l.distance < r.distance;
                     });
    return matches;
}

int match_score(const FeatureList& a, const FeatureList& b, double ratio) {
    return static_cast<int>(match_descriptors(a, b, ratio).size());
}

} // namespace gazereg::features
