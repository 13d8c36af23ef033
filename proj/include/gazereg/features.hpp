#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <vector>

#include "gazereg/geometry.hpp"
#include "gazereg/image.hpp"

namespace gazereg::features {

using geometry::Correspondence;

/// Interest point in level-0 image coordinates. `scale` is the pyramid
/// sampling step the point was detected at (1.0 at the base level),
/// `orientation` the gradient reference angle in [0, 2*pi).
struct Keypoint {
    Point2 position = Point2::Zero();
    double scale = 1.0;
    double orientation = 0.0;
    double response = 0.0;

    bool operator==(const Keypoint&) const = default;
};

/// 256-bit binary descriptor compared by Hamming distance.
struct Descriptor {
    std::array<std::uint8_t, 32> bytes{};

    bool operator==(const Descriptor&) const = default;
};

/// Hamming distance between two descriptors, in [0, 256].
inline int hamming_distance(const Descriptor& a, const Descriptor& b) {
    int dist = 0;
    for (int i = 0; i < 4; ++i) {
        std::uint64_t wa, wb;
        std::memcpy(&wa, a.bytes.data() + 8 * i, 8);
        std::memcpy(&wb, b.bytes.data() + 8 * i, 8);
        dist += std::popcount(wa ^ wb);
    }
    return dist;
}

struct Feature {
    Keypoint keypoint;
    Descriptor descriptor;

    bool operator==(const Feature&) const = default;
};

using FeatureList = std::vector<Feature>;

struct DetectParams {
    int max_keypoints = 1000;
    /// Minimum corner response (min-eigenvalue of the structure tensor over
    /// intensities scaled to [0,1]); below it a pixel is not a corner.
    double threshold = 1e-3;
    int pyramid_levels = 8;
    double scale_factor = 1.2;

    bool operator==(const DetectParams&) const = default;
};

/// Corner detection over a scale pyramid with oriented binary descriptors.
/// Corners are ranked by the min-eigenvalue response of the local structure
/// tensor, non-max suppressed per level, oriented by the dominant gradient
/// direction, and described by 256 steered intensity comparisons on the
/// smoothed patch.
/// Results are sorted by descending response, at most max_keypoints, and
/// identical input yields the identical list.
/// Throws ImageTooSmall when either dimension < 32.
FeatureList detect_and_describe(const ImageGray& img, const DetectParams& params = {});

struct MatchParams {
    /// Lowe ratio in (0, 1]; a nearest neighbor survives only when its
    /// distance < ratio * second-nearest distance.
    double ratio = 0.8;
};

/// Brute-force Hamming matching with the Lowe ratio test applied from both
/// sides plus a mutual cross-check, so the match set is symmetric in its two
/// arguments. Output is sorted by ascending distance. An empty result is a
/// valid outcome.
std::vector<Correspondence> match_descriptors(const FeatureList& a, const FeatureList& b,
                                              double ratio = 0.8);

/// Number of matches between the two feature sets; the pairwise score used to
/// choose the best reference image.
int match_score(const FeatureList& a, const FeatureList& b, double ratio = 0.8);

/// Bilinear resize; used for the detection pyramid.
ImageGray resize_bilinear(const ImageGray& img, int new_width, int new_height);

} // namespace gazereg::features
