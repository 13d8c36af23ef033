#include "gazereg/session.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>
#include <thread>

#include "gazereg/features.hpp"

namespace gazereg::session {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t frame_seed(std::uint64_t seed, std::size_t frame) {
    return splitmix64(seed + 0x9e3779b97f4a7c15ULL * (frame + 1));
}

std::uint64_t candidate_seed(std::uint64_t seed, std::size_t ref) {
    return splitmix64(seed + 0xd1342543de82ef95ULL * (ref + 1));
}

std::vector<std::string_view> split_csv(std::string_view row) {
    std::vector<std::string_view> fields;
    for (;;) {
        const auto comma = row.find(',');
        if (comma == std::string_view::npos) {
            fields.push_back(row);
            return fields;
        }
        fields.push_back(row.substr(0, comma));
        row.remove_prefix(comma + 1);
    }
}

std::int64_t parse_int_field(std::string_view field, int line, const char* what) {
    std::int64_t value = 0;
    const char* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        throw MalformedRow(line, std::string(what) + " is not an integer: '" + std::string(field) +
                                     "'");
    return value;
}

double parse_real_field(std::string_view field, int line, const char* what) {
    double value = 0.0;
    const char* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value))
        throw MalformedRow(line, std::string(what) + " is not a real number: '" +
                                     std::string(field) + "'");
    return value;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Io("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

} // namespace

std::vector<GazeSample> ingest_gaze_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Io("cannot open gaze log: " + path);

    std::string row;
    if (!std::getline(in, row)) throw Io(path + ": empty gaze log");
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row != "t_ms,x_px,y_px,valid")
        throw MalformedRow(1, "expected header t_ms,x_px,y_px,valid");

    std::vector<GazeSample> samples;
    for (int line = 2; std::getline(in, row); ++line) {
        if (!row.empty() && row.back() == '\r') row.pop_back();
        if (row.empty()) continue;

        const auto fields = split_csv(row);
        if (fields.size() != 4) throw MalformedRow(line, "expected 4 fields");

        GazeSample s;
        s.t = static_cast<double>(parse_int_field(fields[0], line, "t_ms"));
        s.gaze.x() = parse_real_field(fields[1], line, "x_px");
        s.gaze.y() = parse_real_field(fields[2], line, "y_px");
        if (fields[3] == "0")
            s.valid = false;
        else if (fields[3] == "1")
            s.valid = true;
        else
            throw MalformedRow(line, "valid flag must be 0 or 1");

        if (!samples.empty() && s.t <= samples.back().t) throw NonMonotonicTimestamp(line);
        samples.push_back(s);
    }
    if (samples.empty()) throw Io(path + ": no gaze samples");
    return samples;
}

std::vector<std::optional<GazeSample>> sync_gaze_to_frames(std::span<const GazeSample> samples,
                                                           std::span<const TestFrame> frames,
                                                           double slack_ms) {
    std::vector<std::optional<GazeSample>> out(frames.size());

    std::vector<std::size_t> valid;
    valid.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i].valid) valid.push_back(i);
    if (valid.empty()) return out;

    for (std::size_t f = 0; f < frames.size(); ++f) {
        const double t = frames[f].t;
        const auto it =
            std::lower_bound(valid.begin(), valid.end(), t,
                             [&](std::size_t idx, double value) { return samples[idx].t < value; });
        const std::size_t none = samples.size();
        std::size_t best = none;
        double best_d = 0.0;
        if (it != valid.end()) {
            best = *it;
            best_d = samples[*it].t - t;
        }
        if (it != valid.begin()) {
            const std::size_t prev = *std::prev(it);
            const double d = t - samples[prev].t;
            // on an exact tie the earlier sample wins
            if (best == none || d <= best_d) {
                best = prev;
                best_d = d;
            }
        }
        if (best != none && best_d <= slack_ms + 1e-9) out[f] = samples[best];
    }
    return out;
}

FrameObservation localize_frame(const registry::Registry& reg, const TestFrame& frame,
                                const LocalizeParams& params) {
    FrameObservation obs;
    obs.frame_index = frame.index;
    const auto& imgs = *reg.images;
    if (imgs.empty()) return obs;

    features::FeatureList feats;
    std::array<double, 64> sig{};
    try {
        feats = features::detect_and_describe(frame.img, reg.build_params);
        sig = registry::thumbnail_signature(frame.img);
    } catch (const ImageTooSmall&) {
        return obs; // nothing to match on; unlocalized is the honest answer
    }
    if (feats.empty()) return obs;

    std::vector<std::pair<double, std::size_t>> candidates;
    candidates.reserve(imgs.size());
    for (std::size_t i = 0; i < imgs.size(); ++i)
        candidates.emplace_back(registry::signature_ssd(sig, imgs[i].thumbnail_sig), i);
    std::sort(candidates.begin(), candidates.end());
    if (candidates.size() > static_cast<std::size_t>(params.top_k))
        candidates.resize(static_cast<std::size_t>(params.top_k));

    const int required = std::max(4, params.min_inliers);
    geometry::RansacParams rp;
    rp.min_inliers = params.min_inliers;
    rp.inlier_threshold_px = params.inlier_threshold_px;

    const registry::ReferenceImage* best_ref = nullptr;
    geometry::RansacResult best_fit;
    for (const auto& [ssd, idx] : candidates) {
        const registry::ReferenceImage& ref = imgs[idx];
        if (static_cast<int>(ref.features.size()) < required) continue;
        const auto matches = features::match_descriptors(feats, ref.features);
        if (static_cast<int>(matches.size()) < required) continue;
        rp.seed = candidate_seed(params.seed, idx);
        geometry::RansacResult fit;
        try {
            fit = geometry::estimate_homography_ransac(matches, rp);
        } catch (const NoConsensus&) {
            continue;
        }
        if (!best_ref || fit.inlier_count > best_fit.inlier_count ||
            (fit.inlier_count == best_fit.inlier_count && ref.id < best_ref->id)) {
            best_ref = &ref;
            best_fit = std::move(fit);
        }
    }

    if (best_ref) {
        obs.ref_id = best_ref->id;
        obs.h = best_fit.h;
        obs.inliers = best_fit.inlier_count;
        obs.worker_pos = best_ref->pose;
    }
    return obs;
}

Point2 map_gaze(const FrameObservation& obs, const Point2& gaze_fpv) {
    if (!obs.h)
        throw NoHomography("frame " + std::to_string(obs.frame_index) +
                           " carries no homography");
    return geometry::transform_point(*obs.h, gaze_fpv);
}

std::optional<std::string> hit_test(const Point2& p,
                                    std::span<const registry::AoiAnnotation> aois,
                                    const std::string& ref_id) {
    const registry::AoiAnnotation* best = nullptr;
    double best_area = 0.0;
    for (const auto& aoi : aois) {
        const auto it = aoi.boxes.find(ref_id);
        if (it == aoi.boxes.end() || !it->second.contains(p)) continue;
        const double area = it->second.area();
        if (!best || area < best_area || (area == best_area && aoi.aoi_id < best->aoi_id)) {
            best = &aoi;
            best_area = area;
        }
    }
    if (!best) return std::nullopt;
    return best->aoi_id;
}

std::vector<AoiDwell> detect_aoi_dwells(std::span<const std::optional<std::string>> hits,
                                        double frame_period_ms, double min_dwell_ms) {
    std::vector<AoiDwell> dwells;
    std::size_t i = 0;
    while (i < hits.size()) {
        if (!hits[i]) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < hits.size() && hits[j] && *hits[j] == *hits[i]) ++j;
        const double duration = static_cast<double>(j - i) * frame_period_ms;
        if (duration >= min_dwell_ms - 1e-9)
            dwells.push_back(AoiDwell{*hits[i], static_cast<double>(i) * frame_period_ms,
                                      static_cast<double>(j) * frame_period_ms, duration});
        i = j;
    }
    return dwells;
}

std::vector<Fixation> detect_fixations(std::span<const GazeSample> samples, double dispersion_px,
                                       double min_duration_ms, double period_ms) {
    std::vector<const GazeSample*> pts;
    pts.reserve(samples.size());
    for (const auto& s : samples)
        if (s.valid) pts.push_back(&s);

    std::vector<Fixation> out;
    const double gap_limit = 2.5 * period_ms;
    std::size_t i = 0;
    while (i < pts.size()) {
        double min_x = pts[i]->gaze.x(), max_x = min_x;
        double min_y = pts[i]->gaze.y(), max_y = min_y;
        std::size_t j = i + 1;
        while (j < pts.size()) {
            if (pts[j]->t - pts[j - 1]->t > gap_limit) break;
            const double nmin_x = std::min(min_x, pts[j]->gaze.x());
            const double nmax_x = std::max(max_x, pts[j]->gaze.x());
            const double nmin_y = std::min(min_y, pts[j]->gaze.y());
            const double nmax_y = std::max(max_y, pts[j]->gaze.y());
            if ((nmax_x - nmin_x) + (nmax_y - nmin_y) > dispersion_px) break;
            min_x = nmin_x;
            max_x = nmax_x;
            min_y = nmin_y;
            max_y = nmax_y;
            ++j;
        }
        const double span = pts[j - 1]->t + period_ms - pts[i]->t;
        if (j - i >= 2 && span >= min_duration_ms - 1e-9) {
            Fixation f;
            f.start_ms = pts[i]->t;
            f.end_ms = pts[j - 1]->t + period_ms;
            Point2 sum = Point2::Zero();
            for (std::size_t k = i; k < j; ++k) sum += pts[k]->gaze;
            f.centroid = sum / static_cast<double>(j - i);
            out.push_back(std::move(f));
            i = j;
        } else {
            ++i;
        }
    }
    return out;
}

std::vector<TestFrame> load_frames(const std::string& dir) {
    const fs::path base(dir);
    json meta;
    try {
        meta = json::parse(read_file(base / "frames.json"));
    } catch (const json::exception& e) {
        throw Io("frames.json: " + std::string(e.what()));
    }

    double fps = 0.0;
    int count = 0, width = 0, height = 0;
    try {
        fps = meta.at("fps").get<double>();
        count = meta.at("count").get<int>();
        width = meta.at("width").get<int>();
        height = meta.at("height").get<int>();
    } catch (const json::exception& e) {
        throw Io("frames.json: " + std::string(e.what()));
    }
    if (fps <= 0.0) throw Io("frames.json: fps must be positive");
    if (count < 0) throw Io("frames.json: count must be nonnegative");

    const double period = 1000.0 / fps;
    std::vector<TestFrame> frames;
    frames.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%06d.png", i);
        TestFrame f;
        f.index = i;
        f.t = i * period;
        f.img = image_io::load_image((base / name).string());
        if (f.img.width != width || f.img.height != height)
            throw Io(std::string(name) + ": size differs from frames.json");
        frames.push_back(std::move(f));
    }
    return frames;
}

AttentionRecord run_session(const registry::Registry& reg, const std::string& gaze_path,
                            std::span<const TestFrame> frames, const SessionParams& params) {
    AttentionRecord rec;
    const std::vector<GazeSample> samples = ingest_gaze_log(gaze_path);
    const auto assigned = sync_gaze_to_frames(samples, frames, params.slack_ms);

    // Parallel map: localization is pure against the immutable registry, so
    // frames fan out across threads and land in their own slots.
    rec.observations.resize(frames.size());
    if (!frames.empty()) {
        const std::size_t workers =
            std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()),
                                  frames.size());
        std::vector<std::exception_ptr> failures(workers);
        std::atomic<std::size_t> cursor{0};
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < workers; ++w)
            threads.emplace_back([&, w] {
                try {
                    for (;;) {
                        const std::size_t i = cursor.fetch_add(1);
                        if (i >= frames.size()) return;
                        LocalizeParams lp;
                        lp.top_k = params.top_k;
                        lp.min_inliers = params.min_inliers;
                        lp.inlier_threshold_px = params.inlier_threshold_px;
                        lp.seed = frame_seed(params.seed, i);
                        rec.observations[i] = localize_frame(reg, frames[i], lp);
                    }
                } catch (...) {
                    failures[w] = std::current_exception();
                }
            });
        for (auto& t : threads) t.join();
        for (const auto& failure : failures)
            if (failure) std::rethrow_exception(failure);
    }

    const double period = frames.size() > 1 ? frames[1].t - frames[0].t : 40.0;

    for (std::size_t i = 0; i < frames.size(); ++i) {
        FrameObservation& obs = rec.observations[i];
        if (assigned[i]) obs.gaze_fpv = assigned[i]->gaze;
        if (obs.h && obs.gaze_fpv) {
            try {
                obs.gaze_ref = geometry::transform_point(*obs.h, *obs.gaze_fpv);
            } catch (const PointAtInfinity&) {
                // the gaze ray misses the reference plane; leave it absent
            }
            if (obs.gaze_ref) obs.hit_aoi = hit_test(*obs.gaze_ref, reg.aois, *obs.ref_id);
        }
        if (obs.worker_pos)
            rec.trajectory.push_back(TrajectoryPoint{obs.frame_index, frames[i].t,
                                                     *obs.worker_pos});
    }

    std::vector<std::optional<std::string>> hits;
    hits.reserve(rec.observations.size());
    for (const auto& obs : rec.observations) hits.push_back(obs.hit_aoi);
    rec.dwells = detect_aoi_dwells(hits, period, params.min_dwell_ms);

    // Fixations run over the gaze series mapped into each localized view's
    // reference coordinates; stretches without a usable homography stay in
    // FPV pixels. The series is cut wherever the coordinate frame changes.
    std::vector<GazeSample> segment;
    std::optional<std::string> segment_ref;
    bool segment_open = false;

    const auto flush = [&] {
        if (segment.size() >= 2) {
            auto found = detect_fixations(segment, params.dispersion_px, params.min_fixation_ms,
                                          params.gaze_period_ms);
            for (auto& f : found) {
                f.ref_id = segment_ref;
                if (f.ref_id) f.hit_aoi = hit_test(f.centroid, reg.aois, *f.ref_id);
                rec.fixations.push_back(std::move(f));
            }
        }
        segment.clear();
    };

    for (const GazeSample& s : samples) {
        if (!s.valid) continue;
        std::optional<std::string> key;
        Point2 point = s.gaze;
        bool usable = true;
        // A sample taken at time t is seen during frame floor(t / period);
        // samples outside the video stay in FPV coordinates.
        const long shown = static_cast<long>(std::floor(s.t / period));
        if (shown >= 0 && shown < static_cast<long>(frames.size())) {
            const FrameObservation& obs = rec.observations[static_cast<std::size_t>(shown)];
            if (obs.h) {
                try {
                    point = geometry::transform_point(*obs.h, s.gaze);
                    key = obs.ref_id;
                } catch (const PointAtInfinity&) {
                    usable = false;
                }
            }
        }
        if (!usable) {
            flush();
            segment_open = false;
            continue;
        }
        if (!segment_open || key != segment_ref) {
            flush();
            segment_ref = key;
            segment_open = true;
        }
        segment.push_back(GazeSample{s.t, point, true});
    }
    flush();

    return rec;
}

} // namespace gazereg::session
