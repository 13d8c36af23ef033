#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "gazereg/errors.hpp"

namespace gazereg {

/// Image-plane point in pixels. Origin at the top-left corner, y grows downward.
using Point2 = Eigen::Vector2d;

namespace geometry {

/// 3x3 planar projective transform, kept in a canonical scale:
/// Frobenius norm 1 and h(2,2) >= 0 whenever h(2,2) != 0.
/// Construction rejects singular matrices.
class Homography33 {
public:
    Homography33() : m_(Eigen::Matrix3d::Identity() / std::sqrt(3.0)) {}

    /// Normalizes `m` into the canonical scale. Throws DegenerateConfiguration
    /// if `m` is (numerically) singular.
    explicit Homography33(const Eigen::Matrix3d& m);

    const Eigen::Matrix3d& matrix() const { return m_; }
    double operator()(int r, int c) const { return m_(r, c); }

    Homography33 inverse() const { return Homography33(m_.inverse()); }

    static Homography33 identity() { return Homography33(Eigen::Matrix3d::Identity()); }
    static Homography33 translation(double tx, double ty);
    static Homography33 scaling(double sx, double sy);

private:
    Eigen::Matrix3d m_;
};

/// One putative point match between two images. `distance` is the descriptor
/// distance that produced it (Hamming units; 0 for synthetic matches).
struct Correspondence {
    Point2 src;
    Point2 dst;
    int distance = 0;
};

/// Axis-aligned rectangle in pixel coordinates, x_min < x_max and y_min < y_max.
/// (x_min, y_min) is the upper-left corner under the y-down convention.
struct BoundingBox {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    bool valid() const { return x_min < x_max && y_min < y_max; }

    /// Strict-inequality containment: the boundary itself does not count.
    bool contains(const Point2& p) const {
        return p.x() > x_min && p.x() < x_max && p.y() > y_min && p.y() < y_max;
    }

    bool operator==(const BoundingBox&) const = default;
};

/// Maps p through h in homogeneous coordinates and dehomogenizes.
/// Throws PointAtInfinity when the projective depth |w'| < 1e-12.
Point2 transform_point(const Homography33& h, const Point2& p);

/// Maps the four corners of `b` through `h` and returns their axis-aligned
/// hull. Propagated AOI boxes stay axis-aligned by design, accepting slight
/// over-coverage on rotation.
BoundingBox transform_box(const Homography33& h, const BoundingBox& b);

/// Least-squares homography from >= 4 correspondences by the normalized DLT:
/// both point sets are translated to zero centroid and scaled to mean
/// distance sqrt(2), the stacked linear system is solved by SVD, and the
/// result is denormalized. Throws TooFewPoints below 4 correspondences and
/// DegenerateConfiguration when the system is rank-deficient (collinear or
/// coincident points).
Homography33 estimate_homography_dlt(std::span<const Correspondence> correspondences);

struct RansacParams {
    double inlier_threshold_px = 3.0;
    int max_iterations = 2000;
    double confidence = 0.995;
    int min_inliers = 15;
    std::uint64_t seed = 0;
};

struct RansacResult {
    Homography33 h;
    std::vector<std::uint8_t> inlier_mask; // 1 = inlier under the returned model
    int inlier_count = 0;
};

/// RANSAC over minimal 4-point DLT hypotheses. A correspondence is an inlier
/// when its symmetric transfer error (RMS of the forward and backward
/// reprojection distances) is below inlier_threshold_px. The iteration budget
/// shrinks adaptively with the usual confidence formula, the best consensus
/// set is refit by DLT, and the mask is re-evaluated under the refit model.
/// Bit-reproducible for a fixed params.seed.
/// Throws NoConsensus when the best inlier count < max(4, min_inliers).
RansacResult estimate_homography_ransac(std::span<const Correspondence> correspondences,
                                        const RansacParams& params = {});

/// RMS of the forward (src -> dst) and backward (dst -> src) reprojection
/// distances of one correspondence, in pixels.
double symmetric_transfer_error(const Homography33& h, const Correspondence& c);

} // namespace geometry
} // namespace gazereg
