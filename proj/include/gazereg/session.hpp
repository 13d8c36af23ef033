#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazereg/errors.hpp"
#include "gazereg/geometry.hpp"
#include "gazereg/image.hpp"
#include "gazereg/registry.hpp"

namespace gazereg::session {

/// One eye-tracker reading. `t` is milliseconds from session start; the
/// nominal sampling period is 10 ms. `valid` mirrors the tracker's own
/// validity flag; invalid rows are kept but never used for assignment.
struct GazeSample {
    double t = 0.0;
    Point2 gaze = Point2::Zero();
    bool valid = true;

    bool operator==(const GazeSample&) const = default;
};

/// First-person-view video frame. `t` = index times the frame period
/// (40 ms at the default 25 FPS).
struct TestFrame {
    int index = 0;
    double t = 0.0;
    ImageGray img;
};

/// Everything the pipeline learned about one frame. Unlocalized frames keep
/// ref_id/h absent; gaze_ref exists only when both a homography and a synced
/// gaze point do, and worker_pos only when the matched reference carries a
/// camera pose.
struct FrameObservation {
    int frame_index = 0;
    std::optional<std::string> ref_id;
    std::optional<geometry::Homography33> h; // FPV pixels -> reference pixels
    int inliers = 0;
    std::optional<Point2> gaze_fpv; // absent = no usable gaze for this frame
    std::optional<Point2> gaze_ref;
    std::optional<std::string> hit_aoi;
    std::optional<registry::CameraPose> worker_pos;
};

/// Dispersion-threshold fixation. Times in ms; end = last sample time plus
/// one sample period, so duration is a whole number of periods. The centroid
/// lives in the coordinates of `ref_id`, or in FPV pixels when absent.
struct Fixation {
    double start_ms = 0.0;
    double end_ms = 0.0;
    Point2 centroid = Point2::Zero();
    std::optional<std::string> ref_id;
    std::optional<std::string> hit_aoi;

    double duration_ms() const { return end_ms - start_ms; }

    bool operator==(const Fixation&) const = default;
};

/// Qualifying stay of gaze inside one AOI: at least min_dwell_ms of
/// consecutive same-AOI frames. Duration is run length times frame period.
struct AoiDwell {
    std::string aoi_id;
    double start_ms = 0.0;
    double end_ms = 0.0;
    double duration_ms = 0.0;

    bool operator==(const AoiDwell&) const = default;
};

struct TrajectoryPoint {
    int frame_index = 0;
    double t_ms = 0.0;
    registry::CameraPose pos;

    bool operator==(const TrajectoryPoint&) const = default;
};

struct AttentionRecord {
    std::vector<FrameObservation> observations;
    std::vector<Fixation> fixations;
    std::vector<AoiDwell> dwells;
    std::vector<TrajectoryPoint> trajectory;
};

/// Parses a gaze log CSV with header `t_ms,x_px,y_px,valid` (t integer ms,
/// x/y real FPV pixels, valid 0 or 1). Timestamps must strictly increase.
/// Throws Io on an unreadable or sample-free file, MalformedRow(line) on a
/// bad row, NonMonotonicTimestamp(line) on a timestamp that fails to grow.
std::vector<GazeSample> ingest_gaze_log(const std::string& path);

/// Assigns to each frame the valid sample nearest in time, earlier sample on
/// a tie. Frames whose nearest valid sample is farther than slack_ms away
/// get no assignment (gaze-missing). The default slack is three half-periods
/// of the nominal 100 Hz gaze clock.
std::vector<std::optional<GazeSample>> sync_gaze_to_frames(std::span<const GazeSample> samples,
                                                           std::span<const TestFrame> frames,
                                                           double slack_ms = 15.0);

struct LocalizeParams {
    /// Fingerprint candidates given a full RANSAC attempt.
    int top_k = 10;
    int min_inliers = 15;
    double inlier_threshold_px = 3.0;
    std::uint64_t seed = 0;
};

/// Matches the frame against the registry: features the frame, ranks
/// references by fingerprint distance, fine-matches the top-k, and keeps the
/// reference with the most RANSAC inliers (ties toward the lower reference
/// id). Frames nothing can explain with min_inliers support come back
/// unlocalized; that is a result, not an error.
FrameObservation localize_frame(const registry::Registry& reg, const TestFrame& frame,
                                const LocalizeParams& params = {});

/// Maps an FPV gaze point into the matched reference's pixel coordinates.
/// Throws NoHomography when the observation is unlocalized; PointAtInfinity
/// propagates from the projective division.
Point2 map_gaze(const FrameObservation& obs, const Point2& gaze_fpv);

/// Returns the id of the AOI whose box on `ref_id` strictly contains p.
/// Containment excludes the boundary. When several boxes contain p the
/// smallest area wins, then the lower aoi id.
std::optional<std::string> hit_test(const Point2& p,
                                    std::span<const registry::AoiAnnotation> aois,
                                    const std::string& ref_id);

/// Collapses a per-frame AOI-hit sequence into qualifying dwells: maximal
/// runs of consecutive frames on one AOI, counted as run length times the
/// frame period (six 40 ms frames = 240 ms). Missing entries break runs.
std::vector<AoiDwell> detect_aoi_dwells(std::span<const std::optional<std::string>> hits,
                                        double frame_period_ms, double min_dwell_ms = 240.0);

/// Dispersion-threshold (I-DT) fixation detection over one gaze series in a
/// single coordinate frame. A window grows while (max x - min x) +
/// (max y - min y) stays within dispersion_px and emits a fixation once it
/// spans min_duration_ms. Invalid samples are dropped; a gap above 2.5
/// sample periods between surviving samples breaks the window, so short
/// tracker dropouts are tolerated and long ones are not bridged.
std::vector<Fixation> detect_fixations(std::span<const GazeSample> samples,
                                       double dispersion_px = 25.0,
                                       double min_duration_ms = 100.0, double period_ms = 10.0);

struct SessionParams {
    double slack_ms = 15.0;
    int top_k = 10;
    int min_inliers = 15;
    double inlier_threshold_px = 3.0;
    double dispersion_px = 25.0;
    double min_fixation_ms = 100.0;
    double min_dwell_ms = 240.0;
    double gaze_period_ms = 10.0;
    std::uint64_t seed = 0;
};

/// Reads a frames directory: `frames.json` ({fps, count, width, height})
/// plus `frame_000000.png` onward. Throws Io on a missing or inconsistent
/// manifest and UnreadableImage on a bad frame file.
std::vector<TestFrame> load_frames(const std::string& dir);

/// The whole test phase: ingest the gaze log, sync it to the frames,
/// localize every frame (in parallel), map gaze into reference coordinates,
/// hit-test the AOIs, and fold the results into dwells, fixations, and the
/// worker trajectory. Gaze over unlocalized stretches still produces
/// fixations, in FPV coordinates, but never contributes to AOI statistics.
/// Deterministic for fixed inputs and seed.
AttentionRecord run_session(const registry::Registry& reg, const std::string& gaze_path,
                            std::span<const TestFrame> frames, const SessionParams& params = {});

} // namespace gazereg::session
