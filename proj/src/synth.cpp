#include "gazereg/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace gazereg::synth {

namespace {

// SplitMix64. One stream per generator call, advanced in a fixed order
// (texture, then views, then jitters, then gaze noise), so a seed replays
// byte-identically.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    double gauss(double sigma) {
        // Box-Muller; the first draw is kept away from zero so the log is finite.
        const double u1 = std::max(unit(), 1e-12);
        const double u2 = unit();
        return sigma * std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }
};

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

constexpr int kCellPx = 16;

// Board of flat cells whose shade differs from the left and upper neighbors
// by at least two quantization steps, so every cell corner is a strong,
// locally unique feature. Optional per-pixel noise keeps warped copies from
// aliasing back onto the grid.
ImageGray board_texture(int size, bool two_tone, double noise_sigma, Rng& rng) {
    const int cells = (size + kCellPx - 1) / kCellPx;
    std::vector<int> shade(static_cast<std::size_t>(cells) * cells, 0);
    for (int cy = 0; cy < cells; ++cy) {
        for (int cx = 0; cx < cells; ++cx) {
            int s = 0;
            if (two_tone) {
                s = ((cx + cy) & 1) ? 224 : 32;
            } else {
                const int left = cx > 0 ? shade[static_cast<std::size_t>(cy) * cells + cx - 1] : -1000;
                const int up = cy > 0 ? shade[static_cast<std::size_t>(cy - 1) * cells + cx] : -1000;
                do
                    s = 20 + 30 * static_cast<int>(rng.next() % 8);
                while (std::abs(s - left) < 60 || std::abs(s - up) < 60);
            }
            shade[static_cast<std::size_t>(cy) * cells + cx] = s;
        }
    }
    ImageGray img(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double v = shade[static_cast<std::size_t>(y / kCellPx) * cells + x / kCellPx];
            if (noise_sigma > 0.0) v += rng.gauss(noise_sigma);
            img.at(x, y) = to_byte(v);
        }
    }
    return img;
}

ImageGray noise_texture(int size, Rng& rng) {
    ImageGray img(size, size);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.next() & 0xff);
    return img;
}

// Similarity-plus-projective warp about the image center, drawn from the
// given ranges. Mapping direction is base -> warped view.
geometry::Homography33 draw_warp(double cx, double cy, const WarpRanges& w, Rng& rng) {
    const double theta = rng.uniform(-w.rotation_rad, w.rotation_rad);
    const double s = rng.uniform(w.scale_min, w.scale_max);
    const double tx = rng.uniform(-w.translation_px, w.translation_px);
    const double ty = rng.uniform(-w.translation_px, w.translation_px);
    const double px = rng.uniform(-w.projective, w.projective);
    const double py = rng.uniform(-w.projective, w.projective);

    Eigen::Matrix3d core;
    core << s * std::cos(theta), -s * std::sin(theta), tx,
            s * std::sin(theta),  s * std::cos(theta), ty,
            px,                   py,                  1.0;
    Eigen::Matrix3d in = Eigen::Matrix3d::Identity();
    in(0, 2) = -cx;
    in(1, 2) = -cy;
    Eigen::Matrix3d out = Eigen::Matrix3d::Identity();
    out(0, 2) = cx;
    out(1, 2) = cy;
    return geometry::Homography33(out * core * in);
}

// Upper estimate of how far the ranges can move a base corner, used to scale
// the pairwise view-separation requirement.
double max_corner_displacement(int size, const WarpRanges& w) {
    const double r = size * std::numbers::sqrt2 / 2.0;
    const double scale_dev = std::max(1.0 - w.scale_min, w.scale_max - 1.0);
    return r * w.rotation_rad + r * scale_dev + w.translation_px * std::numbers::sqrt2 +
           r * w.projective * size;
}

// Largest disagreement between two view warps over the base corners.
double view_distance(const geometry::Homography33& a, const geometry::Homography33& b,
                     int size) {
    const double s = size;
    const Point2 corners[4] = {Point2(0, 0), Point2(s, 0), Point2(0, s), Point2(s, s)};
    double worst = 0.0;
    for (const Point2& c : corners)
        worst = std::max(worst,
                         (geometry::transform_point(a, c) - geometry::transform_point(b, c)).norm());
    return worst;
}

void validate_ranges(const WarpRanges& w) {
    if (!(w.rotation_rad >= 0.0 && w.rotation_rad <= std::numbers::pi))
        throw InvalidWarpRange("rotation range must lie in [0, pi] radians");
    if (!(w.scale_min > 0.0 && w.scale_max >= w.scale_min))
        throw InvalidWarpRange("scale range must satisfy 0 < min <= max");
    if (!(w.translation_px >= 0.0))
        throw InvalidWarpRange("translation range must be nonnegative");
    if (!(w.projective >= 0.0 && w.projective <= 1e-3))
        throw InvalidWarpRange("projective range must lie in [0, 1e-3]");
}

std::string view_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "view_%03d", index);
    return buf;
}

// Monotone event-to-view assignment: the walk advances only at event
// boundaries, never mid-event, so a fixation is always seen through a
// single reference and the detector's per-reference segmentation cannot
// split it.
int view_for_event(std::size_t event, std::size_t event_count, std::size_t view_count) {
    if (event_count <= 1 || view_count <= 1) return 0;
    const double pos = static_cast<double>(event) * static_cast<double>(view_count - 1) /
                       static_cast<double>(event_count - 1);
    return static_cast<int>(std::llround(pos));
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Io("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Io("short write to " + path.string());
}

} // namespace

ImageGray render_view(const ImageGray& base, const geometry::Homography33& h) {
    ImageGray dst(base.width, base.height);
    const Eigen::Matrix3d inv = h.matrix().inverse();
    for (int y = 0; y < dst.height; ++y) {
        for (int x = 0; x < dst.width; ++x) {
            const Eigen::Vector3d q = inv * Eigen::Vector3d(x, y, 1.0);
            if (std::abs(q.z()) < 1e-12) continue;
            const double sx = q.x() / q.z();
            const double sy = q.y() / q.z();
            if (sx < 0.0 || sy < 0.0 || sx > base.width - 1.0 || sy > base.height - 1.0)
                continue;
            const int x0 = static_cast<int>(sx);
            const int y0 = static_cast<int>(sy);
            const int x1 = std::min(x0 + 1, base.width - 1);
            const int y1 = std::min(y0 + 1, base.height - 1);
            const double fx = sx - x0;
            const double fy = sy - y0;
            const double v = (1.0 - fy) * ((1.0 - fx) * base.at(x0, y0) + fx * base.at(x1, y0)) +
                             fy * ((1.0 - fx) * base.at(x0, y1) + fx * base.at(x1, y1));
            dst.at(x, y) = to_byte(v);
        }
    }
    return dst;
}

Scene generate_scene(const SceneSpec& spec) {
    if (spec.size < 32)
        throw ImageTooSmall("scene size " + std::to_string(spec.size) +
                            " is below the 32 px minimum");
    if (spec.view_count < 1) throw InvalidWarpRange("view_count must be at least 1");
    validate_ranges(spec.warp);
    for (const auto& aoi : spec.aois) {
        if (!aoi.box.valid())
            throw InvertedBox("aoi " + aoi.aoi_id + ": box has no area");
        if (aoi.box.x_min < 0.0 || aoi.box.y_min < 0.0 || aoi.box.x_max > spec.size ||
            aoi.box.y_max > spec.size)
            throw BoxOutOfBounds("aoi " + aoi.aoi_id + ": box leaves the base image");
    }

    Rng rng(spec.seed);
    Scene scene;
    scene.size = spec.size;
    switch (spec.texture) {
    case TextureKind::checker: scene.base = board_texture(spec.size, true, 0.0, rng); break;
    case TextureKind::noise: scene.base = noise_texture(spec.size, rng); break;
    case TextureKind::blended: scene.base = board_texture(spec.size, false, 3.0, rng); break;
    }
    scene.aois = spec.aois;

    // Views are redrawn until they satisfy two feasibility conditions.
    // Pairwise distinct: when two references nearly coincide, "which view
    // does this frame show" stops being well defined and localization ties
    // become coin flips. The required separation scales with what the
    // ranges can deliver, so deliberately degenerate specs (all ranges
    // zero) stay legal. Regions in frame: every region box must map fully
    // inside the view image, otherwise its propagated footprint gets
    // cropped at the border and gaze falling in the cropped strip cannot
    // be attributed, which would desynchronize the scripted truth.
    const double c = spec.size / 2.0;
    const double separation =
        std::min(40.0, 0.35 * max_corner_displacement(spec.size, spec.warp));
    scene.views.reserve(static_cast<std::size_t>(spec.view_count));
    for (int i = 0; i < spec.view_count; ++i) {
        SceneView view;
        if (i == 0) {
            view.h = geometry::Homography33::identity();
        } else {
            int attempts = 0;
            for (;;) {
                view.h = draw_warp(c, c, spec.warp, rng);
                const bool distinct =
                    std::none_of(scene.views.begin(), scene.views.end(), [&](const SceneView& v) {
                        return view_distance(view.h, v.h, spec.size) < separation;
                    });
                const bool aois_in_frame =
                    std::all_of(spec.aois.begin(), spec.aois.end(), [&](const AoiSeed& a) {
                        const geometry::BoundingBox m = geometry::transform_box(view.h, a.box);
                        return m.x_min >= 0.0 && m.y_min >= 0.0 &&
                               m.x_max <= spec.size && m.y_max <= spec.size;
                    });
                if (distinct && aois_in_frame) break;
                if (++attempts >= 200)
                    throw InvalidWarpRange(
                        "warp ranges cannot keep " + std::to_string(spec.view_count) +
                        " views distinguishable with every region in frame");
            }
        }
        view.img = i == 0 ? scene.base : render_view(scene.base, view.h);
        view.pose.position = Eigen::Vector3d(0.9 * i, 0.5 * std::sin(0.7 * i), 1.7);
        view.pose.label = "step " + std::to_string(i);
        scene.views.push_back(std::move(view));
    }
    return scene;
}

ScriptEvent fixate(const Point2& target, double duration_ms) {
    return ScriptEvent{ScriptEvent::Kind::fixate, target, duration_ms};
}

ScriptEvent saccade(double duration_ms) {
    return ScriptEvent{ScriptEvent::Kind::saccade, Point2::Zero(), duration_ms};
}

ScriptEvent off_scene(double duration_ms) {
    return ScriptEvent{ScriptEvent::Kind::off_scene, Point2::Zero(), duration_ms};
}

GeneratedSession generate_session(const Scene& scene, const SessionScript& script) {
    if (scene.views.empty()) throw EmptyList("scene has no views");
    if (script.events.empty()) throw EmptyList("session script has no events");
    if (!(script.fps > 0.0))
        throw DegenerateSample("frame rate must be positive");
    if (!(script.gaze_hz > 0.0 && script.gaze_hz <= 1000.0))
        throw DegenerateSample("gaze rate must lie in (0, 1000] Hz for integer timestamps");
    if (!(script.noise_sigma_px >= 0.0))
        throw DegenerateSample("gaze noise sigma must be nonnegative");

    const std::size_t event_count = script.events.size();
    std::vector<double> starts(event_count + 1, 0.0);
    for (std::size_t e = 0; e < event_count; ++e) {
        const ScriptEvent& ev = script.events[e];
        if (!(ev.duration_ms > 0.0))
            throw DegenerateSample("script event durations must be positive");
        if (ev.kind == ScriptEvent::Kind::fixate &&
            (ev.target.x() < 0.0 || ev.target.y() < 0.0 || ev.target.x() > scene.size ||
             ev.target.y() > scene.size))
            throw PointOutsideScene("fixation target (" + format_double(ev.target.x()) + ", " +
                                    format_double(ev.target.y()) + ") leaves the " +
                                    std::to_string(scene.size) + " px base image");
        starts[e + 1] = starts[e] + ev.duration_ms;
    }
    const double span = starts[event_count];

    const auto event_at = [&](double t) {
        const auto it = std::upper_bound(starts.begin(), starts.end(), t);
        const std::size_t idx = static_cast<std::size_t>(it - starts.begin());
        return std::min(idx > 0 ? idx - 1 : 0, event_count - 1);
    };

    GeneratedSession out;
    out.fps = script.fps;
    const double period = 1000.0 / script.fps;
    const double gaze_period = 1000.0 / script.gaze_hz;
    const int frame_count = static_cast<int>(std::ceil(span / period - 1e-9));

    Rng rng(script.seed);

    // Per-frame warps first: the active view for the event on display at the
    // frame's start time, composed with a small jitter so consecutive frames
    // differ the way a moving camera's would.
    out.frame_warps.reserve(static_cast<std::size_t>(frame_count));
    out.frame_views.reserve(static_cast<std::size_t>(frame_count));
    const double c = scene.size / 2.0;
    const WarpRanges jitter_range{0.035, 0.98, 1.02, 3.0, 0.0};
    std::vector<geometry::Homography33> jitter;
    jitter.reserve(static_cast<std::size_t>(frame_count));
    for (int k = 0; k < frame_count; ++k) {
        const int v = view_for_event(event_at(k * period), event_count, scene.views.size());
        jitter.push_back(draw_warp(c, c, jitter_range, rng));
        out.frame_views.push_back(v);
        out.frame_warps.push_back(geometry::Homography33(
            jitter.back().matrix() * scene.views[static_cast<std::size_t>(v)].h.matrix()));
    }

    // Frames are re-renders of the active view image, not of the base: a
    // video frame is what the camera near that viewpoint saw, so it inherits
    // the view's sampling, which is also what keeps the frame matching its
    // own reference rather than a neighboring one. The analytic base-to-frame
    // map is still jitter composed with the view homography, to within
    // interpolation error.
    out.frames.reserve(static_cast<std::size_t>(frame_count));
    for (int k = 0; k < frame_count; ++k) {
        const std::size_t v = static_cast<std::size_t>(out.frame_views[static_cast<std::size_t>(k)]);
        out.frames.push_back(session::TestFrame{
            k, k * period, render_view(scene.views[v].img, jitter[static_cast<std::size_t>(k)])});
    }

    // Gaze channel: integer-millisecond timestamps on the sample grid,
    // scripted base points pushed through the displayed frame's warp, plus
    // isotropic Gaussian noise. Saccades sweep linearly between the
    // neighboring fixation targets.
    const auto fixate_before = [&](std::size_t e) -> const ScriptEvent* {
        for (std::size_t i = e; i-- > 0;)
            if (script.events[i].kind == ScriptEvent::Kind::fixate) return &script.events[i];
        return nullptr;
    };
    const auto fixate_after = [&](std::size_t e) -> const ScriptEvent* {
        for (std::size_t i = e + 1; i < event_count; ++i)
            if (script.events[i].kind == ScriptEvent::Kind::fixate) return &script.events[i];
        return nullptr;
    };

    std::vector<Point2> sample_base; // scripted scene point behind each sample
    for (long i = 0;; ++i) {
        const double t = static_cast<double>(std::llround(i * gaze_period));
        if (t >= span - 1e-9) break;
        const std::size_t e = event_at(t);
        const ScriptEvent& ev = script.events[e];

        Point2 base_point = Point2::Zero();
        bool valid = true;
        if (ev.kind == ScriptEvent::Kind::off_scene) {
            valid = false;
        } else if (ev.kind == ScriptEvent::Kind::fixate) {
            base_point = ev.target;
        } else {
            const ScriptEvent* prev = fixate_before(e);
            const ScriptEvent* next = fixate_after(e);
            if (prev == nullptr && next == nullptr) {
                valid = false;
            } else if (prev == nullptr) {
                base_point = next->target;
            } else if (next == nullptr) {
                base_point = prev->target;
            } else {
                const double u = (t - starts[e]) / ev.duration_ms;
                base_point = prev->target + u * (next->target - prev->target);
            }
        }

        if (!valid) {
            out.gaze.push_back(session::GazeSample{t, Point2::Zero(), false});
            sample_base.push_back(Point2::Zero());
            continue;
        }
        const int k = std::min(frame_count - 1, static_cast<int>(t / period));
        Point2 fpv =
            geometry::transform_point(out.frame_warps[static_cast<std::size_t>(k)], base_point);
        fpv.x() += rng.gauss(script.noise_sigma_px);
        fpv.y() += rng.gauss(script.noise_sigma_px);
        out.gaze.push_back(session::GazeSample{t, fpv, true});
        sample_base.push_back(base_point);
    }

    // Truth channel, computed from the script alone, using the same
    // strict-containment, smallest-box rule as the pipeline's hit test.
    std::vector<registry::AoiAnnotation> annos;
    annos.reserve(scene.aois.size());
    for (const auto& aoi : scene.aois)
        annos.push_back(registry::AoiAnnotation{aoi.aoi_id, aoi.label, {{"base", aoi.box}}});

    // Each frame is assigned the valid sample nearest its start time (the
    // synchronizer's rule, applied analytically); the frame counts toward
    // whatever AOI the sample's scripted scene point sits in, saccade sweeps
    // included. A sample captured across a view change does not count: the
    // pipeline would map it through the new view's homography while it was
    // recorded under the old one, so its reference position is undefined.
    std::vector<double> valid_t;
    std::vector<Point2> valid_base;
    valid_t.reserve(out.gaze.size());
    valid_base.reserve(out.gaze.size());
    for (std::size_t i = 0; i < out.gaze.size(); ++i) {
        if (!out.gaze[i].valid) continue;
        valid_t.push_back(out.gaze[i].t);
        valid_base.push_back(sample_base[i]);
    }

    std::vector<std::optional<std::string>> frame_hit(static_cast<std::size_t>(frame_count));
    for (int k = 0; k < frame_count; ++k) {
        if (valid_t.empty()) break;
        const double ft = k * period;
        const auto it = std::lower_bound(valid_t.begin(), valid_t.end(), ft);
        std::size_t best = valid_t.size();
        double best_d = -1.0;
        if (it != valid_t.end()) {
            best = static_cast<std::size_t>(it - valid_t.begin());
            best_d = std::abs(*it - ft);
        }
        if (it != valid_t.begin()) {
            const double d = std::abs(*(it - 1) - ft);
            if (best_d < 0.0 || d <= best_d) {
                best = static_cast<std::size_t>(it - valid_t.begin()) - 1;
                best_d = d;
            }
        }
        if (best_d < 0.0 || best_d > 15.0 + 1e-9) continue;
        const int shown = std::min(frame_count - 1, static_cast<int>(valid_t[best] / period));
        if (out.frame_views[static_cast<std::size_t>(shown)] !=
            out.frame_views[static_cast<std::size_t>(k)])
            continue;
        frame_hit[static_cast<std::size_t>(k)] = session::hit_test(valid_base[best], annos, "base");
    }

    out.truth.span_ms = span;
    out.truth.dwells = session::detect_aoi_dwells(frame_hit, period);
    for (const auto& d : out.truth.dwells) out.truth.dwell_ms[d.aoi_id] += d.duration_ms;

    // Fixation truth on the gaze grid: a fixation event yields one detected
    // fixation spanning its samples plus one trailing sample period, as long
    // as at least two samples land inside it.
    for (std::size_t e = 0; e < event_count; ++e) {
        if (script.events[e].kind != ScriptEvent::Kind::fixate) continue;
        const auto lo = std::lower_bound(valid_t.begin(), valid_t.end(), starts[e] - 1e-9);
        const auto hi = std::lower_bound(valid_t.begin(), valid_t.end(), starts[e + 1] - 1e-9);
        if (hi - lo < 2) continue;
        const double span_f = *(hi - 1) + gaze_period - *lo;
        if (span_f < 100.0 - 1e-9) continue;
        ++out.truth.fixation_count;
        out.truth.ft_ms += span_f;
    }
    return out;
}

void write_scene(const Scene& scene, const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root / "refs");

    std::string poses = "image_id,x_m,y_m,z_m,label\n";
    nlohmann::json views = nlohmann::json::array();
    for (std::size_t i = 0; i < scene.views.size(); ++i) {
        const SceneView& view = scene.views[i];
        const std::string id = view_id(static_cast<int>(i));
        image_io::save_png(view.img, (root / "refs" / (id + ".png")).string());
        poses += id + "," + format_double(view.pose.position.x()) + "," +
                 format_double(view.pose.position.y()) + "," +
                 format_double(view.pose.position.z()) + "," + view.pose.label + "\n";
        nlohmann::json jv;
        jv["id"] = id;
        const Eigen::Matrix3d& m = view.h.matrix();
        jv["h"] = {m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2),
                   m(2, 0), m(2, 1), m(2, 2)};
        jv["pose"] = {{"x", view.pose.position.x()},
                      {"y", view.pose.position.y()},
                      {"z", view.pose.position.z()},
                      {"label", view.pose.label}};
        views.push_back(std::move(jv));
    }
    write_text_file(root / "poses.csv", poses);

    nlohmann::json j;
    j["size"] = scene.size;
    j["views"] = std::move(views);
    nlohmann::json aois = nlohmann::json::array();
    for (const auto& aoi : scene.aois)
        aois.push_back({{"aoi_id", aoi.aoi_id},
                        {"label", aoi.label},
                        {"box", {aoi.box.x_min, aoi.box.y_min, aoi.box.x_max, aoi.box.y_max}}});
    j["aois"] = std::move(aois);
    write_text_file(root / "scene.json", j.dump(2) + "\n");
}

void write_session(const GeneratedSession& generated, const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root);

    for (const auto& frame : generated.frames) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%06d.png", frame.index);
        image_io::save_png(frame.img, (root / name).string());
    }

    nlohmann::json manifest;
    manifest["fps"] = generated.fps;
    manifest["count"] = generated.frames.size();
    manifest["width"] = generated.frames.empty() ? 0 : generated.frames.front().img.width;
    manifest["height"] = generated.frames.empty() ? 0 : generated.frames.front().img.height;
    write_text_file(root / "frames.json", manifest.dump(2) + "\n");

    std::string gaze = "t_ms,x_px,y_px,valid\n";
    for (const auto& s : generated.gaze)
        gaze += std::to_string(static_cast<long long>(std::llround(s.t))) + "," +
                format_double(s.gaze.x()) + "," + format_double(s.gaze.y()) + "," +
                (s.valid ? "1" : "0") + "\n";
    write_text_file(root / "gaze.csv", gaze);

    nlohmann::json truth;
    truth["span_ms"] = generated.truth.span_ms;
    truth["ft_ms"] = generated.truth.ft_ms;
    truth["fixation_count"] = generated.truth.fixation_count;
    nlohmann::json dwells = nlohmann::json::array();
    for (const auto& d : generated.truth.dwells)
        dwells.push_back({{"aoi_id", d.aoi_id},
                          {"start_ms", d.start_ms},
                          {"end_ms", d.end_ms},
                          {"duration_ms", d.duration_ms}});
    truth["dwells"] = std::move(dwells);
    truth["dwell_ms"] = generated.truth.dwell_ms;
    truth["frame_views"] = generated.frame_views;
    write_text_file(root / "truth.json", truth.dump(2) + "\n");
}

} // namespace gazereg::synth
