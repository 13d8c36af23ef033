#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <vector>

#include "gazereg/features.hpp"
#include "gazereg/geometry.hpp"
#include "gazereg/image.hpp"
#include "support.hpp"

using namespace gazereg;
using namespace gazereg::features;
using namespace testsupport;
using geometry::Homography33;
using geometry::transform_point;

namespace {

// Synthetic descriptor sets for matcher-only tests: keypoint positions encode
// the element index so planted pairs can be verified.
FeatureList synthetic_features(int count, std::uint64_t seed) {
    Rng rng{seed};
    FeatureList fl(count);
    for (int i = 0; i < count; ++i) {
        fl[i].keypoint.position = Point2(i, 0);
        fl[i].keypoint.scale = 1.0;
        fl[i].keypoint.response = 1.0;
        for (auto& byte : fl[i].descriptor.bytes)
            byte = static_cast<std::uint8_t>(rng.next() & 0xff);
    }
    return fl;
}

bool same_match_set_reversed(const std::vector<geometry::Correspondence>& ab,
                             const std::vector<geometry::Correspondence>& ba) {
    if (ab.size() != ba.size()) return false;
    auto key = [](const geometry::Correspondence& c, bool flip) {
        const Point2& s = flip ? c.dst : c.src;
        const Point2& d = flip ? c.src : c.dst;
        return std::tuple(s.x(), s.y(), d.x(), d.y(), c.distance);
    };
    std::multiset<std::tuple<double, double, double, double, int>> lhs, rhs;
    for (const auto& c : ab) lhs.insert(key(c, false));
    for (const auto& c : ba) rhs.insert(key(c, true));
    return lhs == rhs;
}

} // namespace

TEST_CASE("hamming distance extremes") {
    Descriptor zero{}, ones{};
    ones.bytes.fill(0xff);
    CHECK(hamming_distance(zero, zero) == 0);
    CHECK(hamming_distance(zero, ones) == 256);
    Descriptor one_bit{};
    one_bit.bytes[7] = 0x10;
    CHECK(hamming_distance(zero, one_bit) == 1);
}

TEST_CASE("constant image yields no keypoints") {
    ImageGray img(64, 64);
    std::fill(img.pixels.begin(), img.pixels.end(), std::uint8_t{128});
    CHECK(detect_and_describe(img).empty());
}

TEST_CASE("undersized images are rejected") {
    CHECK_THROWS_AS(detect_and_describe(ImageGray(31, 64)), ImageTooSmall);
    CHECK_THROWS_AS(detect_and_describe(ImageGray(64, 31)), ImageTooSmall);
}

TEST_CASE("every interior checkerboard corner is detected within 2 px") {
    const ImageGray img = checkerboard(256, 32);
    const FeatureList feats = detect_and_describe(img);
    REQUIRE(!feats.empty());

    // Block boundaries fall between pixels k*32-1 and k*32, i.e. at k*32-0.5
    // in pixel-center coordinates.
    int missed = 0;
    for (int gy = 1; gy <= 7; ++gy) {
        for (int gx = 1; gx <= 7; ++gx) {
            const Point2 corner(gx * 32 - 0.5, gy * 32 - 0.5);
            double best = 1e9;
            for (const auto& f : feats)
                best = std::min(best, (f.keypoint.position - corner).norm());
            if (best > 2.0) ++missed;
        }
    }
    CHECK(missed == 0);
}

TEST_CASE("keypoints respect declared invariants") {
    const ImageGray img = textured_board(256, 16, 4.0, 99);
    const FeatureList feats = detect_and_describe(img);
    REQUIRE(!feats.empty());
    for (std::size_t i = 0; i < feats.size(); ++i) {
        const auto& k = feats[i].keypoint;
        CHECK(k.position.x() >= 0.0);
        CHECK(k.position.y() >= 0.0);
        CHECK(k.position.x() <= img.width - 1.0);
        CHECK(k.position.y() <= img.height - 1.0);
        CHECK(k.scale > 0.0);
        CHECK(k.orientation >= 0.0);
        CHECK(k.orientation < 2.0 * std::numbers::pi);
        if (i > 0)
            CHECK(feats[i - 1].keypoint.response >= k.response);
    }
    DetectParams capped;
    capped.max_keypoints = 25;
    CHECK(detect_and_describe(img, capped).size() <= 25);
}

TEST_CASE("detection is deterministic") {
    const ImageGray img = textured_board(256, 16, 4.0, 7);
    const FeatureList a = detect_and_describe(img);
    const FeatureList b = detect_and_describe(img);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].keypoint.position == b[i].keypoint.position);
        CHECK(a[i].keypoint.scale == b[i].keypoint.scale);
        CHECK(a[i].keypoint.orientation == b[i].keypoint.orientation);
        CHECK(a[i].keypoint.response == b[i].keypoint.response);
        CHECK(a[i].descriptor.bytes == b[i].descriptor.bytes);
    }
}

TEST_CASE("identical descriptor sets match one-to-one at distance zero") {
    const FeatureList a = synthetic_features(64, 0xabcde);
    const auto matches = match_descriptors(a, a, 0.8);
    REQUIRE(matches.size() == 64);
    for (const auto& m : matches) {
        CHECK(m.distance == 0);
        CHECK(m.src == m.dst);
    }
}

TEST_CASE("complemented descriptors do not match") {
    const FeatureList a = synthetic_features(64, 0x1dea);
    FeatureList b = a;
    for (auto& f : b)
        for (auto& byte : f.descriptor.bytes)
            byte = static_cast<std::uint8_t>(~byte);
    CHECK(match_descriptors(a, b, 0.8).empty());
}

TEST_CASE("planted pairs are recovered among decoys") {
    const FeatureList a = synthetic_features(100, 0xfeed);
    FeatureList b = a;
    Rng rng{0xd0d0};
    for (auto& f : b) {
        const int flips = static_cast<int>(rng.next() % 9); // up to 8 bit flips
        for (int k = 0; k < flips; ++k) {
            const int bit = static_cast<int>(rng.next() % 256);
            f.descriptor.bytes[bit >> 3] ^= static_cast<std::uint8_t>(1u << (bit & 7));
        }
    }
    const FeatureList decoys = synthetic_features(100, 0xdec0);
    for (std::size_t i = 0; i < decoys.size(); ++i) {
        b.push_back(decoys[i]);
        b.back().keypoint.position = Point2(1000 + i, 0);
    }

    const auto matches = match_descriptors(a, b, 0.8);
    int correct = 0;
    for (const auto& m : matches)
        if (m.src == m.dst) ++correct;
    CHECK(correct >= 95);
}

TEST_CASE("match set is symmetric under argument swap") {
    const ImageGray img = textured_board(256, 16, 4.0, 21);
    const ImageGray rot = warp_image(img, rotation_about(127.5, 127.5, 10.0 * std::numbers::pi / 180.0));
    const FeatureList a = detect_and_describe(img);
    const FeatureList b = detect_and_describe(rot);
    const auto ab = match_descriptors(a, b, 0.8);
    const auto ba = match_descriptors(b, a, 0.8);
    CHECK(!ab.empty());
    CHECK(same_match_set_reversed(ab, ba));
}

TEST_CASE("distances stay within descriptor length") {
    const FeatureList a = synthetic_features(50, 1);
    const FeatureList b = synthetic_features(50, 2);
    for (const auto& m : match_descriptors(a, b, 0.99)) {
        CHECK(m.distance >= 0);
        CHECK(m.distance <= 256);
    }
}

TEST_CASE("tightening the ratio never adds matches") {
    const ImageGray img = textured_board(256, 16, 4.0, 33);
    const ImageGray rot = warp_image(img, rotation_about(127.5, 127.5, 0.2));
    const FeatureList a = detect_and_describe(img);
    const FeatureList b = detect_and_describe(rot);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (const double ratio : {1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.3}) {
        const std::size_t n = match_descriptors(a, b, ratio).size();
        CHECK(n <= prev);
        prev = n;
    }
}

TEST_CASE("match_score trivia") {
    const ImageGray img = noise_image(128, 128, 5150);
    const FeatureList feats = detect_and_describe(img);
    REQUIRE(!feats.empty());
    CHECK(match_score(feats, feats, 0.8) == static_cast<int>(feats.size()));

    ImageGray flat(128, 128);
    std::fill(flat.pixels.begin(), flat.pixels.end(), std::uint8_t{77});
    CHECK(match_score(feats, detect_and_describe(flat), 0.8) == 0);
}

TEST_CASE("15-degree warp keeps a workable match count") {
    const ImageGray img = textured_board(256, 16, 4.0, 404);
    const Homography33 h = rotation_about(127.5, 127.5, 15.0 * std::numbers::pi / 180.0);
    const ImageGray rot = warp_image(img, h);

    const FeatureList a = detect_and_describe(img);
    const FeatureList b = detect_and_describe(rot);
    const auto matches = match_descriptors(a, b, 0.8);

    const auto floor_count = static_cast<std::size_t>(
        0.3 * std::min(a.size(), b.size()));
    CHECK(matches.size() >= floor_count);
}

TEST_CASE("matches agree with the ground-truth warp") {
    const ImageGray img = textured_board(256, 16, 4.0, 808);
    const Homography33 h = rotation_about(127.5, 127.5, 12.0 * std::numbers::pi / 180.0);
    const ImageGray rot = warp_image(img, h);

    const auto matches = match_descriptors(detect_and_describe(img), detect_and_describe(rot), 0.8);
    REQUIRE(matches.size() >= 20);
    int consistent = 0;
    for (const auto& m : matches)
        if ((transform_point(h, m.src) - m.dst).norm() <= 3.0) ++consistent;
    CHECK(static_cast<double>(consistent) >= 0.9 * static_cast<double>(matches.size()));
}

TEST_CASE("detection survives halving and doubling of image scale") {
    const ImageGray img = textured_board(256, 16, 4.0, 1212);
    const ImageGray half = resize_bilinear(img, 128, 128);
    const ImageGray twice = resize_bilinear(img, 512, 512);

    const FeatureList base = detect_and_describe(img);
    for (const ImageGray* variant : {&half, &twice}) {
        const FeatureList v = detect_and_describe(*variant);
        const auto matches = match_descriptors(base, v, 0.8);
        CHECK(matches.size() >= 15);
    }
}
