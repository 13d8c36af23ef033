#pragma once

// Ground-truth generator: synthetic textured scenes viewed under known
// homographies, and scripted gaze sessions over them. Everything here is
// deterministic per seed, so generated data doubles as an oracle: the
// pipeline's output can be compared against the script that produced it.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gazereg/errors.hpp"
#include "gazereg/geometry.hpp"
#include "gazereg/image.hpp"
#include "gazereg/registry.hpp"
#include "gazereg/session.hpp"

namespace gazereg::synth {

enum class TextureKind {
    checker, ///< strict two-tone board; corners repeat, matching is hostile
    noise,   ///< per-pixel noise; feature-rich but structureless
    blended, ///< distinct-shade board plus noise; sharp, identifiable corners
};

/// Half-widths and bounds for the random view warps. Rotation, translation,
/// and the projective terms are drawn symmetrically about zero; scale is
/// drawn from [scale_min, scale_max].
struct WarpRanges {
    double rotation_rad = 0.26;
    double scale_min = 0.85;
    double scale_max = 1.18;
    double translation_px = 30.0;
    double projective = 5e-5;

    bool operator==(const WarpRanges&) const = default;
};

/// A ground-truth AOI drawn on the base image.
struct AoiSeed {
    std::string aoi_id;
    std::string label;
    geometry::BoundingBox box;

    bool operator==(const AoiSeed&) const = default;
};

struct SceneSpec {
    std::uint64_t seed = 0;
    int size = 256;
    TextureKind texture = TextureKind::blended;
    int view_count = 10;
    WarpRanges warp;
    std::vector<AoiSeed> aois;
};

/// One reference view: the rendered image, the exact base-to-view
/// homography it was rendered with, and a camera pose on the walk path.
struct SceneView {
    ImageGray img;
    geometry::Homography33 h;
    registry::CameraPose pose;
};

struct Scene {
    int size = 0;
    ImageGray base;
    std::vector<SceneView> views; ///< views[0] is the identity view
    std::vector<AoiSeed> aois;
};

/// Renders dst(p) = base(h^-1 p) with bilinear sampling; pixels that map
/// outside the base read 0. The one warp renderer used everywhere here, so
/// analytic warp oracles hold for generated data.
ImageGray render_view(const ImageGray& base, const geometry::Homography33& h);

/// Builds the base texture, renders view_count views (the first under the
/// identity), and assigns walk-path poses. Throws InvalidWarpRange on
/// unusable ranges or view counts, ImageTooSmall below the featuring
/// minimum, and InvertedBox / BoxOutOfBounds for bad AOI seeds.
Scene generate_scene(const SceneSpec& spec);

/// One scripted gaze event. Fixations target a point on the base image;
/// saccades sweep between the neighboring fixation targets; off_scene
/// emits invalid samples (tracking loss).
struct ScriptEvent {
    enum class Kind { fixate, saccade, off_scene };
    Kind kind = Kind::fixate;
    Point2 target = Point2::Zero();
    double duration_ms = 0.0;
};

ScriptEvent fixate(const Point2& target, double duration_ms);
ScriptEvent saccade(double duration_ms);
ScriptEvent off_scene(double duration_ms);

struct SessionScript {
    std::vector<ScriptEvent> events;
    double fps = 25.0;
    double gaze_hz = 100.0;
    double noise_sigma_px = 1.0;
    std::uint64_t seed = 0;
};

/// What the pipeline is expected to recover, computed from the script
/// alone: dwell intervals snapped to the frame grid, fixation count and
/// total fixation time snapped to the gaze grid, and per-AOI dwell sums.
struct SessionTruth {
    double span_ms = 0.0;
    double ft_ms = 0.0;
    int fixation_count = 0;
    std::vector<session::AoiDwell> dwells;
    std::map<std::string, double> dwell_ms;
};

struct GeneratedSession {
    double fps = 25.0;
    std::vector<session::TestFrame> frames;
    std::vector<int> frame_views; ///< truth: view index rendered per frame
    std::vector<geometry::Homography33> frame_warps; ///< truth: base -> frame
    std::vector<session::GazeSample> gaze;
    SessionTruth truth;
};

/// Renders the scripted walkthrough: frames carry a per-frame jitter warp on
/// top of the active view (so consecutive frames are not byte-identical),
/// the view advances event by event along the walk, and gaze samples are the
/// scripted base points mapped into each displayed frame plus Gaussian
/// noise. Fixation targets must lie inside the base image
/// (PointOutsideScene); the script must be nonempty with positive durations
/// and rates (EmptyList / DegenerateSample).
///
/// Truth caveats the caller owns: fixation targets should sit several noise
/// sigmas inside their AOI, consecutive fixations on one AOI need a saccade
/// between them wider than the detector dispersion, and rates should keep
/// frame times on the gaze grid (the defaults, 25 FPS at 100 Hz, do).
GeneratedSession generate_session(const Scene& scene, const SessionScript& script);

/// Writes refs/view_NNN.png, poses.csv, and scene.json (views with exact
/// homographies, plus the AOI seeds) under dir.
void write_scene(const Scene& scene, const std::string& dir);

/// Writes frame_NNNNNN.png files, frames.json, gaze.csv, and truth.json
/// under dir, which is exactly the session-module input format.
void write_session(const GeneratedSession& generated, const std::string& dir);

} // namespace gazereg::synth
