#include "gazereg/geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gazereg::geometry {

namespace {

constexpr double kInfinityEps = 1e-12;

bool finite(const Point2& p) { return std::isfinite(p.x()) && std::isfinite(p.y()); }

// SplitMix64; used instead of <random> distributions so that sampling is
// bit-identical across standard library implementations.
struct SplitMix64 {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // Uniform draw in [0, n) by rejection.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do { v = next(); } while (v >= limit);
        return v % n;
    }
};

// Similarity transform taking `pts` to zero centroid and mean distance sqrt(2).
Eigen::Matrix3d hartley_normalization(std::span<const Correspondence> cs, bool use_src) {
    Point2 centroid = Point2::Zero();
    for (const auto& c : cs) centroid += use_src ? c.src : c.dst;
    centroid /= static_cast<double>(cs.size());

    double mean_dist = 0.0;
    for (const auto& c : cs) mean_dist += ((use_src ? c.src : c.dst) - centroid).norm();
    mean_dist /= static_cast<double>(cs.size());
    if (mean_dist < kInfinityEps)
        throw DegenerateConfiguration("all points coincide");

    const double s = std::sqrt(2.0) / mean_dist;
    Eigen::Matrix3d t;
    t << s, 0, -s * centroid.x(),
         0, s, -s * centroid.y(),
         0, 0, 1;
    return t;
}

// Number of inliers of `h` at `threshold`, writing the mask when given.
int count_inliers(const Homography33& h, std::span<const Correspondence> cs,
                  double threshold, std::vector<std::uint8_t>* mask) {
    const Homography33 hinv = h.inverse();
    int count = 0;
    if (mask) mask->assign(cs.size(), 0);
    for (std::size_t i = 0; i < cs.size(); ++i) {
        double err;
        try {
            const Point2 fwd = transform_point(h, cs[i].src);
            const Point2 bwd = transform_point(hinv, cs[i].dst);
            err = std::sqrt(0.5 * ((fwd - cs[i].dst).squaredNorm() + (bwd - cs[i].src).squaredNorm()));
        } catch (const PointAtInfinity&) {
            continue;
        }
        if (err < threshold) {
            ++count;
            if (mask) (*mask)[i] = 1;
        }
    }
    return count;
}

double triangle_area(const Point2& a, const Point2& b, const Point2& c) {
    return 0.5 * std::abs((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

// A minimal sample is unusable if any three of its points are (nearly)
// collinear on either side.
bool sample_degenerate(std::span<const Correspondence> cs, const int idx[4]) {
    for (int skip = 0; skip < 4; ++skip) {
        Point2 s[3], d[3];
        int k = 0;
        for (int j = 0; j < 4; ++j) {
            if (j == skip) continue;
            s[k] = cs[idx[j]].src;
            d[k] = cs[idx[j]].dst;
            ++k;
        }
        if (triangle_area(s[0], s[1], s[2]) < 1e-9 || triangle_area(d[0], d[1], d[2]) < 1e-9)
            return true;
    }
    return false;
}

} // namespace

Homography33::Homography33(const Eigen::Matrix3d& m) {
    const double norm = m.norm();
    if (!(norm > 0.0) || !m.allFinite())
        throw DegenerateConfiguration("homography matrix is not finite");
    Eigen::Matrix3d n = m / norm;
    if (std::abs(n.determinant()) < 1e-12)
        throw DegenerateConfiguration("homography matrix is singular");
    if (std::abs(n(2, 2)) > kInfinityEps) {
        if (n(2, 2) < 0) n = -n;
    } else {
        // Sign convention when h(2,2) == 0: largest-magnitude entry positive.
        int r = 0, c = 0;
        n.cwiseAbs().maxCoeff(&r, &c);
        if (n(r, c) < 0) n = -n;
    }
    m_ = n;
}

Homography33 Homography33::translation(double tx, double ty) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 2) = tx;
    m(1, 2) = ty;
    return Homography33(m);
}

Homography33 Homography33::scaling(double sx, double sy) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 0) = sx;
    m(1, 1) = sy;
    return Homography33(m);
}

Point2 transform_point(const Homography33& h, const Point2& p) {
    if (!finite(p))
        throw PointAtInfinity("input point is not finite");
    const Eigen::Vector3d q = h.matrix() * Eigen::Vector3d(p.x(), p.y(), 1.0);
    if (std::abs(q.z()) < kInfinityEps)
        throw PointAtInfinity("projective depth vanished");
    return Point2(q.x() / q.z(), q.y() / q.z());
}

BoundingBox transform_box(const Homography33& h, const BoundingBox& b) {
    const Point2 corners[4] = {
        {b.x_min, b.y_min}, {b.x_max, b.y_min}, {b.x_min, b.y_max}, {b.x_max, b.y_max}};
    BoundingBox out;
    out.x_min = out.y_min = std::numeric_limits<double>::infinity();
    out.x_max = out.y_max = -std::numeric_limits<double>::infinity();
    for (const auto& corner : corners) {
        const Point2 t = transform_point(h, corner);
        out.x_min = std::min(out.x_min, t.x());
        out.x_max = std::max(out.x_max, t.x());
        out.y_min = std::min(out.y_min, t.y());
        out.y_max = std::max(out.y_max, t.y());
    }
    return out;
}

double symmetric_transfer_error(const Homography33& h, const Correspondence& c) {
    const Point2 fwd = transform_point(h, c.src);
    const Point2 bwd = transform_point(h.inverse(), c.dst);
    return std::sqrt(0.5 * ((fwd - c.dst).squaredNorm() + (bwd - c.src).squaredNorm()));
}

Homography33 estimate_homography_dlt(std::span<const Correspondence> correspondences) {
    const std::size_t n = correspondences.size();
    if (n < 4)
        throw TooFewPoints("homography needs >= 4 correspondences, got " + std::to_string(n));
    for (const auto& c : correspondences)
        if (!finite(c.src) || !finite(c.dst))
            throw DegenerateConfiguration("correspondence contains non-finite point");

    const Eigen::Matrix3d t_src = hartley_normalization(correspondences, true);
    const Eigen::Matrix3d t_dst = hartley_normalization(correspondences, false);

    Eigen::MatrixXd a(2 * n, 9);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d s = t_src * Eigen::Vector3d(correspondences[i].src.x(),
                                                          correspondences[i].src.y(), 1.0);
        const Eigen::Vector3d d = t_dst * Eigen::Vector3d(correspondences[i].dst.x(),
                                                          correspondences[i].dst.y(), 1.0);
        const double x = s.x(), y = s.y(), u = d.x(), v = d.y();
        a.row(2 * i)     << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
        a.row(2 * i + 1) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sigma = svd.singularValues();
    // With a one-dimensional null space sigma(8) ~ 0 and sigma(7) > 0; a
    // rank-deficient design matrix leaves more than one solution.
    if (sigma(7) < 1e-10 * sigma(0))
        throw DegenerateConfiguration("design matrix is rank-deficient");

    const Eigen::VectorXd hvec = svd.matrixV().col(8);
    Eigen::Matrix3d h_norm;
    h_norm << hvec(0), hvec(1), hvec(2),
              hvec(3), hvec(4), hvec(5),
              hvec(6), hvec(7), hvec(8);

    const Eigen::Matrix3d h = t_dst.inverse() * h_norm * t_src;
    return Homography33(h);
}

RansacResult estimate_homography_ransac(std::span<const Correspondence> correspondences,
                                        const RansacParams& params) {
    const std::size_t n = correspondences.size();
    if (n < 4)
        throw TooFewPoints("RANSAC needs >= 4 correspondences, got " + std::to_string(n));

    SplitMix64 rng{params.seed ^ 0xa5a5a5a5deadbeefULL};

    int best_count = 0;
    Homography33 best_h;
    bool have_model = false;

    int budget = params.max_iterations;
    for (int iter = 0; iter < budget; ++iter) {
        int idx[4];
        for (int k = 0; k < 4; ++k) {
            bool fresh;
            do {
                idx[k] = static_cast<int>(rng.bounded(n));
                fresh = true;
                for (int j = 0; j < k; ++j)
                    if (idx[j] == idx[k]) fresh = false;
            } while (!fresh);
        }
        if (sample_degenerate(correspondences, idx))
            continue;

        const Correspondence minimal[4] = {correspondences[idx[0]], correspondences[idx[1]],
                                           correspondences[idx[2]], correspondences[idx[3]]};
        Homography33 h;
        int count;
        try {
            h = estimate_homography_dlt(minimal);
            // Inversion of an extreme hypothesis can also fail the
            // invertibility invariant; treat that sample as degenerate too.
            count = count_inliers(h, correspondences, params.inlier_threshold_px, nullptr);
        } catch (const DegenerateConfiguration&) {
            continue;
        }
        if (count > best_count) {
            best_count = count;
            best_h = h;
            have_model = true;
            // Standard adaptive stop: enough iterations to hit an
            // all-inlier sample with the requested confidence.
            const double w = static_cast<double>(count) / static_cast<double>(n);
            const double p_good = std::pow(w, 4);
            if (p_good >= 1.0 - 1e-12) {
                budget = iter + 1;
            } else if (p_good > 0.0) {
                const double need = std::log(1.0 - params.confidence) / std::log(1.0 - p_good);
                // Only tighten when the estimate actually lands below the
                // remaining budget; casting a huge `need` to int overflows.
                if (need < static_cast<double>(budget - iter - 1))
                    budget = iter + 1 + static_cast<int>(std::ceil(need));
            }
        }
    }

    const int required = std::max(4, params.min_inliers);
    if (!have_model || best_count < required)
        throw NoConsensus("best consensus " + std::to_string(best_count) +
                          " below required " + std::to_string(required));

    // Refit on the full consensus set, then report the mask of the refit model.
    std::vector<std::uint8_t> mask;
    count_inliers(best_h, correspondences, params.inlier_threshold_px, &mask);
    std::vector<Correspondence> inliers;
    inliers.reserve(best_count);
    for (std::size_t i = 0; i < n; ++i)
        if (mask[i]) inliers.push_back(correspondences[i]);

    RansacResult result;
    result.h = best_h;
    try {
        const Homography33 refit = estimate_homography_dlt(inliers);
        result.inlier_count = count_inliers(refit, correspondences,
                                            params.inlier_threshold_px, &result.inlier_mask);
        result.h = refit;
        return result;
    } catch (const DegenerateConfiguration&) {
        // refit unusable, fall back to the winning hypothesis
    }
    result.inlier_count = count_inliers(best_h, correspondences,
                                        params.inlier_threshold_px, &result.inlier_mask);
    return result;
}

} // namespace gazereg::geometry
