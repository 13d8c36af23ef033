// gazereg: the command-line surface over the registration and analytics
// library. Subcommands cover the whole batch workflow: build a reference
// registry, hand-annotate and propagate AOIs, analyze a recorded session,
// correlate per-worker metrics against hazard recognition, validate dwell
// output against a manually coded channel, and generate synthetic
// ground-truth scenes and sessions.
//
// Exit codes are a stable contract: 0 success, 2 usage or input error,
// 1 internal failure. Every JSON report embeds the fully resolved
// configuration and the tool version; --deterministic drops the timestamp
// so reruns with one config are byte-identical.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#ifdef __GNUG__
#include <cxxabi.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "gazereg/errors.hpp"
#include "gazereg/metrics.hpp"
#include "gazereg/registry.hpp"
#include "gazereg/session.hpp"
#include "gazereg/synth.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace gazereg;

constexpr const char* kVersion = "0.1.0";

/// Unqualified class name of an exception, for error lines like
/// "error: NoSeeds: ...". Falls back to the mangled name off GCC.
std::string error_name(const std::exception& e) {
    std::string name = typeid(e).name();
#ifdef __GNUG__
    int status = 0;
    char* demangled = abi::__cxa_demangle(name.c_str(), nullptr, nullptr, &status);
    if (status == 0 && demangled) name = demangled;
    std::free(demangled);
#endif
    const auto pos = name.rfind("::");
    return pos == std::string::npos ? name : name.substr(pos + 2);
}

std::string iso8601_utc_now() {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Io("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Io("write failed: " + path.string());
}

/// Stamps the shared report fields and writes the report. An empty or "-"
/// path prints to stdout instead.
void emit_report(json& report, const std::string& out_path, bool deterministic) {
    report["version"] = kVersion;
    if (!deterministic) report["generated_at"] = iso8601_utc_now();
    const std::string text = report.dump(2) + "\n";
    if (out_path.empty() || out_path == "-")
        std::fputs(text.c_str(), stdout);
    else
        write_text_file(out_path, text);
}

json point_json(const Point2& p) { return json::array({p.x(), p.y()}); }

json box_json(const geometry::BoundingBox& b) {
    return json::array({b.x_min, b.y_min, b.x_max, b.y_max});
}

/// Reads a per-AOI dwell table: CSV with header `aoi_id,dwell_ms`.
std::map<std::string, double> load_dwell_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Io("cannot open dwell table: " + path);
    std::string row;
    if (!std::getline(in, row)) throw Io(path + ": empty dwell table");
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row != "aoi_id,dwell_ms")
        throw Io(path + ": expected header aoi_id,dwell_ms, got '" + row + "'");
    std::map<std::string, double> table;
    int line = 1;
    while (std::getline(in, row)) {
        ++line;
        if (!row.empty() && row.back() == '\r') row.pop_back();
        if (row.empty()) continue;
        const auto comma = row.find(',');
        if (comma == std::string::npos) throw MalformedRow(line, "expected 2 fields");
        const std::string id = row.substr(0, comma);
        const std::string cell = row.substr(comma + 1);
        if (id.empty()) throw MalformedRow(line, "empty aoi_id");
        char* end = nullptr;
        const double ms = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0' || !std::isfinite(ms))
            throw MalformedRow(line, "bad number '" + cell + "'");
        if (!table.emplace(id, ms).second)
            throw MalformedRow(line, "duplicate aoi_id '" + id + "'");
    }
    if (table.empty()) throw Io(path + ": no rows");
    return table;
}

// ---- build-registry ----

struct BuildOpts {
    std::string frames_dir;
    std::string out_dir;
    std::string poses;
    features::DetectParams fp;
};

int run_build(const BuildOpts& o) {
    if (!fs::is_directory(o.frames_dir)) throw Io("not a directory: " + o.frames_dir);
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(o.frames_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw Io("no .png images in " + o.frames_dir);

    const registry::Registry reg = registry::build_registry(
        paths, o.poses.empty() ? std::nullopt : std::optional<std::string>(o.poses), o.fp);
    registry::save_registry(reg, o.out_dir);

    std::size_t total = 0;
    for (const auto& img : *reg.images) {
        std::printf("  %s: %zu features (%dx%d)\n", img.id.c_str(), img.features.size(),
                    img.width, img.height);
        total += img.features.size();
    }
    std::printf("registry: %zu images, %zu features -> %s\n", reg.images->size(), total,
                o.out_dir.c_str());
    return 0;
}

// ---- annotate ----

struct AnnotateOpts {
    std::string registry_dir;
    std::string aoi_id;
    std::string label;
    std::string image_id;
    std::vector<double> box;
};

int run_annotate(const AnnotateOpts& o) {
    const registry::Registry reg = registry::load_registry(o.registry_dir);
    const geometry::BoundingBox box{o.box[0], o.box[1], o.box[2], o.box[3]};
    const registry::Registry seeded = registry::seed_aoi(reg, o.aoi_id, o.label, o.image_id, box);
    registry::save_registry(seeded, o.registry_dir);
    std::printf("seeded %s (\"%s\") on %s: [%g, %g, %g, %g]\n", o.aoi_id.c_str(),
                o.label.c_str(), o.image_id.c_str(), box.x_min, box.y_min, box.x_max, box.y_max);
    return 0;
}

// ---- propagate ----

struct PropagateOpts {
    std::string registry_dir;
    registry::PropagateParams pp;
};

int run_propagate(const PropagateOpts& o) {
    const registry::Registry reg = registry::load_registry(o.registry_dir);
    const auto [annotated, report] = registry::propagate_aois(reg, o.pp);
    registry::save_registry(annotated, o.registry_dir);

    const std::size_t covered = reg.images->size() - report.uncovered.size();
    for (const auto& link : report.propagated)
        std::printf("  %s <- %s (%d inliers)\n", link.image_id.c_str(), link.anchor_id.c_str(),
                    link.inliers);
    for (const auto& id : report.uncovered) std::printf("  %s: uncovered\n", id.c_str());
    std::printf("coverage: %zu/%zu images; propagated %zu, uncovered %zu\n", covered,
                reg.images->size(), report.propagated.size(), report.uncovered.size());
    return 0;
}

// ---- analyze ----

struct AnalyzeOpts {
    std::string registry_dir;
    std::string frames_dir;
    std::string gaze_path;
    std::string out_path;
    std::string dwell_csv;
    std::string metrics_csv;
    session::SessionParams sp;
    bool deterministic = false;
};

json analyze_config(const AnalyzeOpts& o) {
    return json{{"subcommand", "analyze"},
                {"registry", o.registry_dir},
                {"frames", o.frames_dir},
                {"gaze", o.gaze_path},
                {"out", o.out_path},
                {"dwell_csv", o.dwell_csv},
                {"metrics_csv", o.metrics_csv},
                {"slack_ms", o.sp.slack_ms},
                {"top_k", o.sp.top_k},
                {"min_inliers", o.sp.min_inliers},
                {"inlier_threshold_px", o.sp.inlier_threshold_px},
                {"dispersion_px", o.sp.dispersion_px},
                {"min_fixation_ms", o.sp.min_fixation_ms},
                {"min_dwell_ms", o.sp.min_dwell_ms},
                {"gaze_period_ms", o.sp.gaze_period_ms},
                {"seed", o.sp.seed},
                {"deterministic", o.deterministic}};
}

json metrics_json(const metrics::MetricsReport& m) {
    json j{{"sd_ms", m.sd_ms}, {"fc", m.fc}, {"ft_ms", m.ft_ms}};
    j["mfd_ms"] = m.mfd_ms ? json(*m.mfd_ms) : json();
    j["roaft"] = m.roaft ? json(*m.roaft) : json();
    j["fr"] = m.fr ? json(*m.fr) : json();
    j["dwell_ms"] = json::object();
    for (const auto& [aoi, ms] : m.dwell_ms) j["dwell_ms"][aoi] = ms;
    return j;
}

int run_analyze(const AnalyzeOpts& o) {
    const registry::Registry reg = registry::load_registry(o.registry_dir);
    const std::vector<session::TestFrame> frames = session::load_frames(o.frames_dir);
    const double period_ms = frames.size() > 1 ? frames[1].t - frames[0].t : 40.0;
    const double span_ms = static_cast<double>(frames.size()) * period_ms;

    const session::AttentionRecord rec = session::run_session(reg, o.gaze_path, frames, o.sp);
    const metrics::MetricsReport mr = metrics::compute_metrics(rec.fixations, rec.dwells, span_ms);

    int localized = 0;
    for (const auto& obs : rec.observations)
        if (obs.ref_id) ++localized;

    json report;
    report["config"] = analyze_config(o);
    report["metrics"] = metrics_json(mr);

    report["dwells"] = json::array();
    for (const auto& d : rec.dwells)
        report["dwells"].push_back({{"aoi_id", d.aoi_id},
                                    {"start_ms", d.start_ms},
                                    {"end_ms", d.end_ms},
                                    {"duration_ms", d.duration_ms}});

    // Table-2-shaped per-AOI totals, in AOI-id order.
    report["dwell_table"] = json::array();
    for (const auto& [aoi, ms] : mr.dwell_ms)
        report["dwell_table"].push_back({{"aoi_id", aoi}, {"dwell_ms", ms}});

    report["fixations"] = json::array();
    for (const auto& f : rec.fixations) {
        json entry{{"start_ms", f.start_ms},
                   {"end_ms", f.end_ms},
                   {"duration_ms", f.duration_ms()},
                   {"centroid", point_json(f.centroid)}};
        entry["ref_id"] = f.ref_id ? json(*f.ref_id) : json();
        entry["hit_aoi"] = f.hit_aoi ? json(*f.hit_aoi) : json();
        report["fixations"].push_back(std::move(entry));
    }

    report["trajectory"] = json::array();
    for (const auto& tp : rec.trajectory)
        report["trajectory"].push_back({{"frame_index", tp.frame_index},
                                        {"t_ms", tp.t_ms},
                                        {"x_m", tp.pos.position.x()},
                                        {"y_m", tp.pos.position.y()},
                                        {"z_m", tp.pos.position.z()},
                                        {"label", tp.pos.label}});

    report["frames"] = json::array();
    for (const auto& obs : rec.observations) {
        json entry{{"frame_index", obs.frame_index}, {"inliers", obs.inliers}};
        entry["ref_id"] = obs.ref_id ? json(*obs.ref_id) : json();
        entry["gaze_fpv"] = obs.gaze_fpv ? point_json(*obs.gaze_fpv) : json();
        entry["gaze_ref"] = obs.gaze_ref ? point_json(*obs.gaze_ref) : json();
        entry["hit_aoi"] = obs.hit_aoi ? json(*obs.hit_aoi) : json();
        report["frames"].push_back(std::move(entry));
    }

    report["localization"] = {{"frames_total", frames.size()}, {"frames_localized", localized}};
    report["warnings"] = json::array();
    if (localized == 0)
        report["warnings"].push_back(
            "no frame localized against the registry; AOI statistics are empty");

    emit_report(report, o.out_path, o.deterministic);

    if (!o.dwell_csv.empty()) {
        std::string csv = "aoi_id,dwell_ms\n";
        char row[128];
        for (const auto& [aoi, ms] : mr.dwell_ms) {
            std::snprintf(row, sizeof(row), "%s,%.2f\n", aoi.c_str(), ms);
            csv += row;
        }
        write_text_file(o.dwell_csv, csv);
    }
    if (!o.metrics_csv.empty()) {
        std::string csv = "sd_ms,fc,ft_ms,mfd_ms,roaft,fr\n";
        char row[192];
        std::snprintf(row, sizeof(row), "%.2f,%d,%.2f,", mr.sd_ms, mr.fc, mr.ft_ms);
        csv += row;
        auto cell = [&csv](const std::optional<double>& v, char sep) {
            char buf[48];
            if (v) {
                std::snprintf(buf, sizeof(buf), "%.2f%c", *v, sep);
                csv += buf;
            } else {
                csv += sep;
            }
        };
        cell(mr.mfd_ms, ',');
        cell(mr.roaft, ',');
        cell(mr.fr, '\n');
        write_text_file(o.metrics_csv, csv);
    }

    std::printf("analyzed %zu frames: %d localized, %zu fixations, %zu dwells -> %s\n",
                frames.size(), localized, rec.fixations.size(), rec.dwells.size(),
                o.out_path.c_str());
    return 0;
}

// ---- correlate ----

struct CorrelateOpts {
    std::string workers_path;
    std::string out_path;
    std::string csv_path;
    bool deterministic = false;
};

int run_correlate(const CorrelateOpts& o) {
    const std::vector<metrics::WorkerAverages> workers = metrics::load_worker_table(o.workers_path);
    const std::vector<metrics::CorrelationRow> rows = metrics::correlation_table(workers);

    json report;
    report["config"] = {{"subcommand", "correlate"},
                        {"workers", o.workers_path},
                        {"out", o.out_path},
                        {"csv", o.csv_path},
                        {"deterministic", o.deterministic}};
    report["rows"] = json::array();
    for (const auto& r : rows) {
        json entry{{"metric", r.metric}, {"r", r.r}, {"n", r.n}};
        entry["p"] = r.p ? json(*r.p) : json();
        report["rows"].push_back(std::move(entry));
    }
    emit_report(report, o.out_path, o.deterministic);

    if (!o.csv_path.empty()) {
        std::string csv = "metric,r,p,n\n";
        char row[96];
        for (const auto& r : rows) {
            if (r.p)
                std::snprintf(row, sizeof(row), "%s,%.3f,%.3f,%d\n", r.metric.c_str(), r.r, *r.p,
                              r.n);
            else
                std::snprintf(row, sizeof(row), "%s,%.3f,,%d\n", r.metric.c_str(), r.r, r.n);
            csv += row;
        }
        write_text_file(o.csv_path, csv);
    }

    std::printf("correlated %zu metrics over %zu workers -> %s\n", rows.size(), workers.size(),
                o.out_path.empty() ? "-" : o.out_path.c_str());
    return 0;
}

// ---- validate ----

struct ValidateOpts {
    std::string system_path;
    std::string manual_path;
    std::string out_path;
    std::string csv_path;
    bool deterministic = false;
};

int run_validate(const ValidateOpts& o) {
    const std::map<std::string, double> system_dt = load_dwell_csv(o.system_path);
    const std::map<std::string, double> manual_dt = load_dwell_csv(o.manual_path);
    const metrics::ValidationReport vr = metrics::validation_accuracy(system_dt, manual_dt);

    json report;
    report["config"] = {{"subcommand", "validate"},
                        {"system", o.system_path},
                        {"manual", o.manual_path},
                        {"out", o.out_path},
                        {"csv", o.csv_path},
                        {"deterministic", o.deterministic}};
    report["rows"] = json::array();
    for (const auto& r : vr.rows)
        report["rows"].push_back({{"aoi_id", r.aoi_id},
                                  {"system_ms", r.system_ms},
                                  {"manual_ms", r.manual_ms},
                                  {"variation_ms", r.variation_ms},
                                  {"accuracy_pct", r.accuracy_pct}});
    report["mean_accuracy_pct"] = vr.mean_accuracy_pct;
    emit_report(report, o.out_path, o.deterministic);

    if (!o.csv_path.empty()) {
        std::string csv = "aoi_id,system_ms,manual_ms,variation_ms,accuracy_pct\n";
        char row[160];
        for (const auto& r : vr.rows) {
            std::snprintf(row, sizeof(row), "%s,%.2f,%.2f,%.2f,%d\n", r.aoi_id.c_str(),
                          r.system_ms, r.manual_ms, r.variation_ms, r.accuracy_pct);
            csv += row;
        }
        std::snprintf(row, sizeof(row), "mean,,,,%d\n", vr.mean_accuracy_pct);
        csv += row;
        write_text_file(o.csv_path, csv);
    }

    std::printf("validated %zu AOIs: mean accuracy %d%%\n", vr.rows.size(),
                vr.mean_accuracy_pct);
    return 0;
}

// ---- synth ----

struct SynthOpts {
    std::string spec_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::none_of(known.begin(), known.end(),
                         [&key](const char* k) { return key == k; }))
            throw Io("spec: unknown key '" + key + "' in " + where);
    }
}

synth::TextureKind parse_texture(const std::string& name) {
    if (name == "checker") return synth::TextureKind::checker;
    if (name == "noise") return synth::TextureKind::noise;
    if (name == "blended") return synth::TextureKind::blended;
    throw Io("spec: unknown texture '" + name + "' (expected checker, noise, or blended)");
}

/// Parses the synth spec JSON into a scene spec plus a session script,
/// filling every omitted field with the module defaults. An absent or empty
/// "script" gets a three-fixation walk across the scene so a bare "{}" spec
/// still produces an ingestible session.
std::pair<synth::SceneSpec, synth::SessionScript> parse_synth_spec(const json& j) {
    reject_unknown_keys(j, {"seed", "size", "texture", "view_count", "warp", "aois", "script"},
                        "spec");
    synth::SceneSpec spec;
    spec.seed = j.value("seed", spec.seed);
    spec.size = j.value("size", spec.size);
    spec.view_count = j.value("view_count", spec.view_count);
    if (j.contains("texture")) spec.texture = parse_texture(j.at("texture").get<std::string>());
    if (j.contains("warp")) {
        const json& w = j.at("warp");
        reject_unknown_keys(
            w, {"rotation_rad", "scale_min", "scale_max", "translation_px", "projective"},
            "warp");
        spec.warp.rotation_rad = w.value("rotation_rad", spec.warp.rotation_rad);
        spec.warp.scale_min = w.value("scale_min", spec.warp.scale_min);
        spec.warp.scale_max = w.value("scale_max", spec.warp.scale_max);
        spec.warp.translation_px = w.value("translation_px", spec.warp.translation_px);
        spec.warp.projective = w.value("projective", spec.warp.projective);
    }
    if (j.contains("aois")) {
        for (const json& a : j.at("aois")) {
            reject_unknown_keys(a, {"aoi_id", "label", "box"}, "aois[]");
            const json& b = a.at("box");
            if (!b.is_array() || b.size() != 4)
                throw Io("spec: aoi box must be [x_min, y_min, x_max, y_max]");
            spec.aois.push_back(synth::AoiSeed{
                a.at("aoi_id").get<std::string>(), a.value("label", std::string()),
                geometry::BoundingBox{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                      b[3].get<double>()}});
        }
    }

    synth::SessionScript script;
    const json s = j.value("script", json::object());
    reject_unknown_keys(s, {"fps", "gaze_hz", "noise_sigma_px", "seed", "events"}, "script");
    script.fps = s.value("fps", script.fps);
    script.gaze_hz = s.value("gaze_hz", script.gaze_hz);
    script.noise_sigma_px = s.value("noise_sigma_px", script.noise_sigma_px);
    script.seed = s.value("seed", script.seed);
    if (s.contains("events")) {
        for (const json& e : s.at("events")) {
            reject_unknown_keys(e, {"kind", "target", "duration_ms"}, "events[]");
            const std::string kind = e.at("kind").get<std::string>();
            const double ms = e.at("duration_ms").get<double>();
            if (kind == "fixate") {
                const json& t = e.at("target");
                if (!t.is_array() || t.size() != 2) throw Io("spec: fixate target must be [x, y]");
                script.events.push_back(
                    synth::fixate(Point2(t[0].get<double>(), t[1].get<double>()), ms));
            } else if (kind == "saccade") {
                script.events.push_back(synth::saccade(ms));
            } else if (kind == "off_scene") {
                script.events.push_back(synth::off_scene(ms));
            } else {
                throw Io("spec: unknown event kind '" + kind +
                         "' (expected fixate, saccade, or off_scene)");
            }
        }
    }
    if (script.events.empty()) {
        const double q = spec.size / 16.0;
        script.events = {synth::fixate(Point2(5 * q, 5 * q), 400.0),   synth::saccade(40.0),
                         synth::fixate(Point2(11 * q, 5 * q), 400.0),  synth::saccade(40.0),
                         synth::fixate(Point2(8 * q, 11 * q), 400.0)};
    }
    return {spec, script};
}

json synth_config(const synth::SceneSpec& spec, const synth::SessionScript& script,
                  const SynthOpts& o) {
    json aois = json::array();
    for (const auto& a : spec.aois)
        aois.push_back({{"aoi_id", a.aoi_id}, {"label", a.label}, {"box", box_json(a.box)}});
    json events = json::array();
    for (const auto& e : script.events) {
        switch (e.kind) {
        case synth::ScriptEvent::Kind::fixate:
            events.push_back({{"kind", "fixate"},
                              {"target", point_json(e.target)},
                              {"duration_ms", e.duration_ms}});
            break;
        case synth::ScriptEvent::Kind::saccade:
            events.push_back({{"kind", "saccade"}, {"duration_ms", e.duration_ms}});
            break;
        case synth::ScriptEvent::Kind::off_scene:
            events.push_back({{"kind", "off_scene"}, {"duration_ms", e.duration_ms}});
            break;
        }
    }
    return json{{"subcommand", "synth"},
                {"spec", o.spec_path},
                {"out", o.out_dir},
                {"seed", spec.seed},
                {"size", spec.size},
                {"texture", spec.texture == synth::TextureKind::checker  ? "checker"
                            : spec.texture == synth::TextureKind::noise ? "noise"
                                                                        : "blended"},
                {"view_count", spec.view_count},
                {"warp",
                 {{"rotation_rad", spec.warp.rotation_rad},
                  {"scale_min", spec.warp.scale_min},
                  {"scale_max", spec.warp.scale_max},
                  {"translation_px", spec.warp.translation_px},
                  {"projective", spec.warp.projective}}},
                {"aois", aois},
                {"script",
                 {{"fps", script.fps},
                  {"gaze_hz", script.gaze_hz},
                  {"noise_sigma_px", script.noise_sigma_px},
                  {"seed", script.seed},
                  {"events", events}}}};
}

int run_synth(const SynthOpts& o) {
    json j;
    try {
        std::ifstream in(o.spec_path);
        if (!in) throw Io("cannot open spec: " + o.spec_path);
        j = json::parse(in);
        if (!j.is_object()) throw Io("spec: top level must be a JSON object");
    } catch (const json::exception& e) {
        throw Io("spec: " + std::string(e.what()));
    }

    auto [spec, script] = [&j] {
        try {
            return parse_synth_spec(j);
        } catch (const json::exception& e) {
            throw Io("spec: " + std::string(e.what()));
        }
    }();
    if (o.seed) {
        spec.seed = *o.seed;
        script.seed = *o.seed;
    }

    const synth::Scene scene = synth::generate_scene(spec);
    const synth::GeneratedSession gen = synth::generate_session(scene, script);

    const fs::path out(o.out_dir);
    synth::write_scene(scene, (out / "scene").string());
    synth::write_session(gen, (out / "session").string());
    json resolved = synth_config(spec, script, o);
    resolved["version"] = kVersion;
    write_text_file(out / "spec_resolved.json", resolved.dump(2) + "\n");

    std::printf("scene: %zu views, %zu aois -> %s\n", scene.views.size(), scene.aois.size(),
                (out / "scene").string().c_str());
    std::printf("session: %zu frames, %zu samples, %zu truth dwells -> %s\n", gen.frames.size(),
                gen.gaze.size(), gen.truth.dwells.size(), (out / "session").string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gaze-to-scene registration and visual-search analytics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    BuildOpts build;
    CLI::App* cmd_build =
        app.add_subcommand("build-registry", "Feature a directory of reference images");
    cmd_build->add_option("--frames", build.frames_dir, "Directory of reference .png images")
        ->required();
    cmd_build->add_option("--out", build.out_dir, "Registry output directory")->required();
    cmd_build->add_option("--poses", build.poses, "Camera poses CSV (image_id,x_m,y_m,z_m,label)");
    cmd_build->add_option("--max-keypoints", build.fp.max_keypoints, "Keypoint budget per image")
        ->capture_default_str();
    cmd_build->add_option("--corner-threshold", build.fp.threshold, "Minimum corner response")
        ->capture_default_str();
    cmd_build->add_option("--pyramid-levels", build.fp.pyramid_levels, "Scale pyramid depth")
        ->capture_default_str();
    cmd_build->add_option("--scale-factor", build.fp.scale_factor, "Pyramid scale step")
        ->capture_default_str();

    AnnotateOpts annotate;
    CLI::App* cmd_annotate = app.add_subcommand("annotate", "Seed one AOI box on one image");
    cmd_annotate->add_option("--registry", annotate.registry_dir, "Registry directory")
        ->required();
    cmd_annotate->add_option("--aoi", annotate.aoi_id, "AOI id")->required();
    cmd_annotate->add_option("--label", annotate.label, "Human-readable AOI label")->required();
    cmd_annotate->add_option("--image", annotate.image_id, "Reference image id")->required();
    cmd_annotate
        ->add_option("--box", annotate.box, "Box as x_min,y_min,x_max,y_max in image pixels")
        ->required()
        ->delimiter(',')
        ->expected(4);

    PropagateOpts propagate;
    CLI::App* cmd_propagate =
        app.add_subcommand("propagate", "Spread seeded AOI boxes across the registry");
    cmd_propagate->add_option("--registry", propagate.registry_dir, "Registry directory")
        ->required();
    cmd_propagate
        ->add_option("--min-inliers", propagate.pp.min_inliers, "Smallest usable RANSAC consensus")
        ->capture_default_str();
    cmd_propagate->add_option("--top-k", propagate.pp.link_top_k, "Link candidates per image")
        ->capture_default_str();
    cmd_propagate->add_option("--seed", propagate.pp.seed, "RANSAC seed")->capture_default_str();

    AnalyzeOpts analyze;
    CLI::App* cmd_analyze =
        app.add_subcommand("analyze", "Run the full session pipeline and write a JSON report");
    cmd_analyze->add_option("--registry", analyze.registry_dir, "Registry directory")->required();
    cmd_analyze->add_option("--frames", analyze.frames_dir, "Session frames directory")
        ->required();
    cmd_analyze->add_option("--gaze", analyze.gaze_path, "Gaze log CSV (t_ms,x_px,y_px,valid)")
        ->required();
    cmd_analyze->add_option("--out", analyze.out_path, "Report path (- for stdout)")->required();
    cmd_analyze->add_option("--seed", analyze.sp.seed, "Localization RANSAC seed")
        ->capture_default_str();
    cmd_analyze->add_option("--slack-ms", analyze.sp.slack_ms, "Gaze-to-frame sync slack")
        ->capture_default_str();
    cmd_analyze->add_option("--top-k", analyze.sp.top_k, "Localization candidates per frame")
        ->capture_default_str();
    cmd_analyze
        ->add_option("--min-inliers", analyze.sp.min_inliers, "Smallest usable RANSAC consensus")
        ->capture_default_str();
    cmd_analyze
        ->add_option("--inlier-threshold", analyze.sp.inlier_threshold_px,
                     "RANSAC inlier threshold in pixels")
        ->capture_default_str();
    cmd_analyze
        ->add_option("--dispersion-px", analyze.sp.dispersion_px, "I-DT dispersion threshold")
        ->capture_default_str();
    cmd_analyze
        ->add_option("--min-fixation-ms", analyze.sp.min_fixation_ms, "Fixation duration floor")
        ->capture_default_str();
    cmd_analyze->add_option("--min-dwell-ms", analyze.sp.min_dwell_ms, "AOI dwell duration floor")
        ->capture_default_str();
    cmd_analyze
        ->add_option("--gaze-period-ms", analyze.sp.gaze_period_ms, "Nominal gaze sample period")
        ->capture_default_str();
    cmd_analyze->add_option("--dwell-csv", analyze.dwell_csv, "Also write per-AOI dwell CSV");
    cmd_analyze->add_option("--metrics-csv", analyze.metrics_csv, "Also write metrics summary CSV");
    cmd_analyze->add_flag("--deterministic", analyze.deterministic,
                          "Omit the timestamp so reruns are byte-identical");

    CorrelateOpts correlate;
    CLI::App* cmd_correlate =
        app.add_subcommand("correlate", "Correlate worker metrics against hazard recognition");
    cmd_correlate
        ->add_option("--workers", correlate.workers_path,
                     "Per-worker averages CSV (worker_id,av_hri,sd_ms,ft_ms,fc,mfd_ms,roaft,fr)")
        ->required();
    cmd_correlate->add_option("--out", correlate.out_path, "Report path (- for stdout)")
        ->required();
    cmd_correlate->add_option("--csv", correlate.csv_path, "Also write the table as CSV");
    cmd_correlate->add_flag("--deterministic", correlate.deterministic,
                            "Omit the timestamp so reruns are byte-identical");

    ValidateOpts validate;
    CLI::App* cmd_validate =
        app.add_subcommand("validate", "Compare system dwell times against a manual channel");
    cmd_validate
        ->add_option("--system", validate.system_path, "System dwell CSV (aoi_id,dwell_ms)")
        ->required();
    cmd_validate
        ->add_option("--manual", validate.manual_path, "Manual dwell CSV (aoi_id,dwell_ms)")
        ->required();
    cmd_validate->add_option("--out", validate.out_path, "Report path (default stdout)");
    cmd_validate->add_option("--csv", validate.csv_path, "Also write the table as CSV");
    cmd_validate->add_flag("--deterministic", validate.deterministic,
                           "Omit the timestamp so reruns are byte-identical");

    SynthOpts synth_opts;
    CLI::App* cmd_synth =
        app.add_subcommand("synth", "Generate a synthetic scene, session, and truth");
    cmd_synth->add_option("--spec", synth_opts.spec_path,
                          "Path to a scene/script spec JSON (a file holding {} uses defaults)")
        ->required();
    cmd_synth->add_option("--out", synth_opts.out_dir, "Output directory")->required();
    std::uint64_t seed_flag = 0;
    CLI::Option* seed_opt =
        cmd_synth->add_option("--seed", seed_flag, "Override both scene and script seeds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (seed_opt->count() > 0) synth_opts.seed = seed_flag;

    try {
        if (app.got_subcommand(cmd_build)) return run_build(build);
        if (app.got_subcommand(cmd_annotate)) return run_annotate(annotate);
        if (app.got_subcommand(cmd_propagate)) return run_propagate(propagate);
        if (app.got_subcommand(cmd_analyze)) return run_analyze(analyze);
        if (app.got_subcommand(cmd_correlate)) return run_correlate(correlate);
        if (app.got_subcommand(cmd_validate)) return run_validate(validate);
        if (app.got_subcommand(cmd_synth)) return run_synth(synth_opts);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s: %s\n", error_name(e).c_str(), e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s: %s\n", error_name(e).c_str(), e.what());
        return 1;
    }
    return 0;
}
