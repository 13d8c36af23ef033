// Release acceptance gate. Each numbered criterion prints one PASS or FAIL
// line with its wall time; the process exits nonzero when any criterion
// fails. Thresholds and time budgets are pinned here on purpose: this binary
// is the contract, not a tunable.
//
// Criteria that involve the command-line surface run the real binary
// (GAZEREG_CLI_PATH, injected by the build) against files on disk.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazereg/features.hpp"
#include "gazereg/geometry.hpp"
#include "gazereg/metrics.hpp"
#include "gazereg/registry.hpp"
#include "gazereg/session.hpp"
#include "gazereg/synth.hpp"

using namespace gazereg;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---- harness ----

struct Outcome {
    bool ok = true;
    std::vector<std::string> notes;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            notes.push_back(what);
        }
    }
};

/// Independent generator for the synthetic criteria, so expected values do
/// not lean on the library's own randomness.
struct SplitMix {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    double gauss() {
        const double u1 = std::max(unit(), 1e-12);
        const double u2 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
};

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd =
        std::string(GAZEREG_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
}

bool trees_equal(const fs::path& a, const fs::path& b, std::string* why) {
    std::vector<std::string> rel_a, rel_b;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a).string());
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b).string());
    std::sort(rel_a.begin(), rel_a.end());
    std::sort(rel_b.begin(), rel_b.end());
    if (rel_a != rel_b) {
        *why = "file lists differ";
        return false;
    }
    for (const auto& rel : rel_a)
        if (read_file(a / rel) != read_file(b / rel)) {
            *why = "content differs: " + rel;
            return false;
        }
    return true;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

// ---- criterion 1: search-metric arithmetic ----

Outcome criterion_metric_arithmetic() {
    Outcome out;
    // 33 fixations summing to exactly 8212.5 ms over an 18250 ms session.
    std::vector<session::Fixation> fixations;
    for (int i = 0; i < 32; ++i)
        fixations.push_back(session::Fixation{i * 500.0, i * 500.0 + 248.0});
    fixations.push_back(session::Fixation{16000.0, 16276.5});

    const metrics::MetricsReport mr = metrics::compute_metrics(fixations, {}, 18250.0);
    out.require(mr.fc == 33, "fc != 33");
    out.require(mr.ft_ms == 8212.5, "ft != 8212.5");
    out.require(mr.mfd_ms.has_value(), "mfd absent");
    out.require(round2(*mr.mfd_ms) == 248.86,
                "mfd rounds to " + std::to_string(round2(*mr.mfd_ms)) + ", want 248.86");
    out.require(round2(mr.ft_ms / mr.sd_ms) == 0.45,
                "ft/sd rounds to " + std::to_string(round2(mr.ft_ms / mr.sd_ms)) + ", want 0.45");
    return out;
}

// ---- criterion 2: dwell validation accuracies ----

Outcome criterion_validation_accuracy() {
    Outcome out;
    const std::map<std::string, double> system_dt = {
        {"D1", 900.0}, {"D2", 235.0}, {"D3", 257.0}, {"D4", 1148.0}, {"D5", 1270.0}};
    const std::map<std::string, double> manual_dt = {
        {"D1", 744.0}, {"D2", 248.0}, {"D3", 248.0}, {"D4", 992.0}, {"D5", 992.0}};
    const metrics::ValidationReport vr = metrics::validation_accuracy(system_dt, manual_dt);

    const std::vector<int> want = {83, 94, 96, 86, 78};
    out.require(vr.rows.size() == want.size(), "row count mismatch");
    for (std::size_t i = 0; i < want.size() && i < vr.rows.size(); ++i)
        out.require(vr.rows[i].accuracy_pct == want[i],
                    vr.rows[i].aoi_id + ": " + std::to_string(vr.rows[i].accuracy_pct) +
                        "%, want " + std::to_string(want[i]) + "%");
    out.require(vr.mean_accuracy_pct == 88,
                "mean " + std::to_string(vr.mean_accuracy_pct) + "%, want 88%");
    return out;
}

// ---- criterion 3: correlation p-values ----

Outcome criterion_p_values() {
    Outcome out;
    const std::vector<std::pair<double, double>> pairs = {
        {0.563, 0.005}, {0.635, 0.001}, {0.649, 0.001},
        {0.393, 0.064}, {-0.093, 0.673}, {-0.132, 0.548}};
    for (const auto& [r, want] : pairs) {
        const double p = metrics::p_value_two_tailed(r, 23);
        out.require(std::abs(p - want) <= 0.002,
                    "p(r=" + std::to_string(r) + ") = " + std::to_string(p) + ", want " +
                        std::to_string(want) + " +/- 0.002");
    }
    return out;
}

// ---- criterion 4: homography recovery ----

Outcome criterion_homography_recovery() {
    Outcome out;
    SplitMix rng{0x5eed4ULL};
    const int sets = 200;
    const int points = 120;
    const int outliers = 36; // 30 %
    int recovered = 0;

    for (int set = 0; set < sets; ++set) {
        // Ground truth: a bounded projective warp about the image center.
        const double theta = rng.uniform(-0.3, 0.3);
        const double s = rng.uniform(0.8, 1.2);
        Eigen::Matrix3d core;
        core << s * std::cos(theta), -s * std::sin(theta), rng.uniform(-25.0, 25.0),
            s * std::sin(theta), s * std::cos(theta), rng.uniform(-25.0, 25.0),
            rng.uniform(-5e-5, 5e-5), rng.uniform(-5e-5, 5e-5), 1.0;
        Eigen::Matrix3d shift_in = Eigen::Matrix3d::Identity();
        shift_in(0, 2) = -128.0;
        shift_in(1, 2) = -128.0;
        Eigen::Matrix3d shift_out = Eigen::Matrix3d::Identity();
        shift_out(0, 2) = 128.0;
        shift_out(1, 2) = 128.0;
        const geometry::Homography33 truth(shift_out * core * shift_in);

        std::vector<geometry::Correspondence> corr(points);
        for (int i = 0; i < points; ++i) {
            const Point2 src(rng.uniform(8.0, 248.0), rng.uniform(8.0, 248.0));
            Point2 dst = geometry::transform_point(truth, src);
            if (i < outliers)
                dst = Point2(rng.uniform(0.0, 256.0), rng.uniform(0.0, 256.0));
            else
                dst += Point2(0.5 * rng.gauss(), 0.5 * rng.gauss());
            corr[i] = geometry::Correspondence{src, dst, 0};
        }

        geometry::RansacParams rp;
        rp.seed = 0x700dULL + static_cast<std::uint64_t>(set);
        try {
            const geometry::RansacResult res = geometry::estimate_homography_ransac(corr, rp);
            double sq_sum = 0.0;
            for (const auto& c : corr) {
                const Point2 got = geometry::transform_point(res.h, c.src);
                const Point2 want = geometry::transform_point(truth, c.src);
                sq_sum += (got - want).squaredNorm();
            }
            if (std::sqrt(sq_sum / points) <= 1.0) ++recovered;
        } catch (const Error&) {
            // an unrecovered set; counted below
        }
    }
    out.require(recovered >= 190, "recovered " + std::to_string(recovered) + "/200 sets, want >= 190");
    out.notes.push_back("recovered " + std::to_string(recovered) + "/200");
    return out;
}

// ---- criterion 5: end-to-end synthetic oracle through the CLI ----

Outcome criterion_end_to_end(const fs::path& work) {
    Outcome out;
    const fs::path dir = work / "e2e";
    const fs::path log = dir / "cli.log";
    fs::create_directories(dir);

    write_file(dir / "spec.json", R"({
  "seed": 2026,
  "size": 256,
  "view_count": 10,
  "aois": [
    {"aoi_id": "H1", "label": "hazard one",   "box": [60, 60, 100, 100]},
    {"aoi_id": "H2", "label": "hazard two",   "box": [156, 60, 196, 100]},
    {"aoi_id": "H3", "label": "hazard three", "box": [108, 108, 148, 148]},
    {"aoi_id": "H4", "label": "hazard four",  "box": [60, 156, 100, 196]},
    {"aoi_id": "H5", "label": "hazard five",  "box": [156, 156, 196, 196]}
  ],
  "script": {
    "seed": 15,
    "events": [
      {"kind": "fixate", "target": [80, 80],   "duration_ms": 400},
      {"kind": "saccade", "duration_ms": 40},
      {"kind": "fixate", "target": [176, 80],  "duration_ms": 400},
      {"kind": "saccade", "duration_ms": 40},
      {"kind": "fixate", "target": [128, 128], "duration_ms": 400},
      {"kind": "saccade", "duration_ms": 40},
      {"kind": "fixate", "target": [80, 176],  "duration_ms": 400},
      {"kind": "saccade", "duration_ms": 40},
      {"kind": "fixate", "target": [176, 176], "duration_ms": 400}
    ]
  }
})");

    const std::string data = (dir / "data").string();
    const std::string reg = (dir / "reg").string();
    out.require(run_cli("synth --spec " + (dir / "spec.json").string() + " --out " + data, log) == 0,
                "synth failed: " + read_file(log));
    if (!out.ok) return out;
    out.require(run_cli("build-registry --frames " + data + "/scene/refs --out " + reg +
                            " --poses " + data + "/scene/poses.csv",
                        log) == 0,
                "build-registry failed: " + read_file(log));
    if (!out.ok) return out;

    const json scene = json::parse(read_file(dir / "data/scene/scene.json"));
    for (const json& aoi : scene.at("aois")) {
        const json& b = aoi.at("box");
        char args[256];
        std::snprintf(args, sizeof(args),
                      "annotate --registry %s --aoi %s --label \"%s\" --image view_000 "
                      "--box %.17g,%.17g,%.17g,%.17g",
                      reg.c_str(), aoi.at("aoi_id").get<std::string>().c_str(),
                      aoi.at("label").get<std::string>().c_str(), b[0].get<double>(),
                      b[1].get<double>(), b[2].get<double>(), b[3].get<double>());
        out.require(run_cli(args, log) == 0, "annotate failed: " + read_file(log));
    }
    if (!out.ok) return out;
    out.require(run_cli("propagate --registry " + reg, log) == 0,
                "propagate failed: " + read_file(log));
    if (!out.ok) return out;

    const std::string report_path = (dir / "report.json").string();
    out.require(run_cli("analyze --registry " + reg + " --frames " + data + "/session --gaze " +
                            data + "/session/gaze.csv --out " + report_path + " --deterministic",
                        log) == 0,
                "analyze failed: " + read_file(log));
    if (!out.ok) return out;

    const json report = json::parse(read_file(report_path));
    const json truth = json::parse(read_file(dir / "data/session/truth.json"));

    // The scripted session must itself satisfy the criterion's premise:
    // at least five dwells spread over five distinct AOIs.
    std::set<std::string> truth_aois;
    for (const json& d : truth.at("dwells")) truth_aois.insert(d.at("aoi_id").get<std::string>());
    out.require(truth.at("dwells").size() >= 5, "script produced fewer than 5 truth dwells");
    out.require(truth_aois.size() == 5, "script did not cover 5 distinct AOIs");

    // Every truth dwell is recovered: same AOI, duration within one frame
    // period (40 ms).
    out.require(report.at("dwells").size() == truth.at("dwells").size(),
                "dwell count " + std::to_string(report.at("dwells").size()) + " vs truth " +
                    std::to_string(truth.at("dwells").size()));
    const std::size_t n_dwells =
        std::min(report.at("dwells").size(), truth.at("dwells").size());
    for (std::size_t i = 0; i < n_dwells; ++i) {
        const json& got = report.at("dwells").at(i);
        const json& want = truth.at("dwells").at(i);
        out.require(got.at("aoi_id") == want.at("aoi_id"),
                    "dwell " + std::to_string(i) + " AOI mismatch");
        const double diff = std::abs(got.at("duration_ms").get<double>() -
                                     want.at("duration_ms").get<double>());
        out.require(diff <= 40.0 + 1e-9,
                    "dwell " + std::to_string(i) + " duration off by " + std::to_string(diff) +
                        " ms");
    }

    // At least 98 % of frames localize to the view they were rendered from.
    const json& frames = report.at("frames");
    const json& views = truth.at("frame_views");
    out.require(frames.size() == views.size(), "frame count mismatch");
    int correct = 0;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        char want[16];
        std::snprintf(want, sizeof(want), "view_%03d", views.at(k).get<int>());
        if (!frames.at(k).at("ref_id").is_null() &&
            frames.at(k).at("ref_id").get<std::string>() == want)
            ++correct;
    }
    out.require(correct >= static_cast<int>(std::ceil(0.98 * frames.size())),
                "correct views " + std::to_string(correct) + "/" + std::to_string(frames.size()));
    out.notes.push_back("dwells " + std::to_string(n_dwells) + "/" +
                        std::to_string(truth.at("dwells").size()) + ", correct views " +
                        std::to_string(correct) + "/" + std::to_string(frames.size()));
    return out;
}

// ---- criterion 6: property suites ----

Eigen::Matrix3d random_projective(SplitMix& rng) {
    const double theta = rng.uniform(-0.6, 0.6);
    const double s = rng.uniform(0.5, 2.0);
    Eigen::Matrix3d m;
    m << s * std::cos(theta), -s * std::sin(theta), rng.uniform(-100.0, 100.0),
        s * std::sin(theta), s * std::cos(theta), rng.uniform(-100.0, 100.0),
        rng.uniform(-1e-4, 1e-4), rng.uniform(-1e-4, 1e-4), 1.0;
    return m;
}

void property_geometry(Outcome& out) {
    SplitMix rng{11ULL};
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Matrix3d m = random_projective(rng);
        const geometry::Homography33 h(m);
        const geometry::Homography33 hinv = h.inverse();
        const double lambda = rng.uniform(0.1, 10.0) * (rng.unit() < 0.5 ? -1.0 : 1.0);
        const geometry::Homography33 h_scaled(m * lambda);
        for (int i = 0; i < 20; ++i) {
            const Point2 p(rng.uniform(0.0, 512.0), rng.uniform(0.0, 512.0));
            const Point2 q = geometry::transform_point(h, p);
            if ((geometry::transform_point(hinv, q) - p).norm() > 1e-9) {
                out.require(false, "geometry round trip exceeded 1e-9");
                return;
            }
            if ((geometry::transform_point(h_scaled, p) - q).norm() > 1e-9) {
                out.require(false, "geometry scale invariance exceeded 1e-9");
                return;
            }
        }
    }
}

void property_matcher(Outcome& out) {
    synth::SceneSpec spec;
    spec.seed = 31;
    spec.size = 128;
    spec.view_count = 2;
    const synth::Scene scene = synth::generate_scene(spec);
    const features::FeatureList fa = features::detect_and_describe(scene.views[0].img);
    const features::FeatureList fb = features::detect_and_describe(scene.views[1].img);

    auto key_set = [](const std::vector<geometry::Correspondence>& matches, bool flip) {
        std::set<std::array<double, 4>> keys;
        for (const auto& c : matches)
            keys.insert(flip ? std::array<double, 4>{c.dst.x(), c.dst.y(), c.src.x(), c.src.y()}
                             : std::array<double, 4>{c.src.x(), c.src.y(), c.dst.x(), c.dst.y()});
        return keys;
    };
    const auto ab = features::match_descriptors(fa, fb, 0.8);
    const auto ba = features::match_descriptors(fb, fa, 0.8);
    out.require(!ab.empty(), "matcher found nothing on a synthetic pair");
    out.require(key_set(ab, false) == key_set(ba, true), "matcher is not symmetric");

    std::size_t prev = 0;
    std::set<std::array<double, 4>> prev_keys;
    for (const double ratio : {0.5, 0.65, 0.8, 0.95}) {
        const auto matches = features::match_descriptors(fa, fb, ratio);
        const auto keys = key_set(matches, false);
        out.require(keys.size() >= prev, "match count fell as the ratio loosened");
        out.require(std::includes(keys.begin(), keys.end(), prev_keys.begin(), prev_keys.end()),
                    "stricter-ratio matches are not a subset");
        prev = keys.size();
        prev_keys = keys;
    }
}

void property_dwells(Outcome& out) {
    SplitMix rng{77ULL};
    const std::vector<std::optional<std::string>> alphabet = {
        std::nullopt, std::optional<std::string>("A"), std::optional<std::string>("B"),
        std::optional<std::string>("C")};
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::optional<std::string>> hits;
        const int n = 1 + static_cast<int>(rng.next() % 80);
        std::optional<std::string> cur = alphabet[rng.next() % alphabet.size()];
        for (int i = 0; i < n; ++i) {
            if (rng.unit() > 0.7) cur = alphabet[rng.next() % alphabet.size()];
            hits.push_back(cur);
        }

        // Independent recount: maximal same-AOI runs of at least six frames.
        std::vector<session::AoiDwell> want;
        std::size_t start = 0;
        for (std::size_t i = 1; i <= hits.size(); ++i) {
            if (i == hits.size() || hits[i] != hits[start]) {
                if (hits[start] && i - start >= 6)
                    want.push_back(session::AoiDwell{*hits[start], start * 40.0, i * 40.0,
                                                     (i - start) * 40.0});
                start = i;
            }
        }

        const auto got = session::detect_aoi_dwells(hits, 40.0);
        if (!(got == want)) {
            out.require(false, "dwell run recount mismatch");
            return;
        }
        for (const auto& d : got) {
            const double frames = d.duration_ms / 40.0;
            if (d.duration_ms < 240.0 || std::abs(frames - std::round(frames)) > 1e-9) {
                out.require(false, "dwell duration off-grid or under the floor");
                return;
            }
        }
    }
}

void property_metrics(Outcome& out) {
    SplitMix rng{123ULL};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<session::Fixation> fixations;
        const int n = static_cast<int>(rng.next() % 40);
        double t = 0.0;
        for (int i = 0; i < n; ++i) {
            const double dur = 100.0 + 10.0 * static_cast<double>(rng.next() % 90);
            fixations.push_back(session::Fixation{t, t + dur});
            t += dur + 10.0 * static_cast<double>(rng.next() % 30);
        }
        const metrics::MetricsReport mr =
            metrics::compute_metrics(fixations, {}, std::max(t, 1.0));
        if (n == 0) {
            out.require(!mr.mfd_ms.has_value(), "mfd present without fixations");
            continue;
        }
        if (std::abs(*mr.mfd_ms * mr.fc - mr.ft_ms) > 1e-9 * std::max(1.0, mr.ft_ms)) {
            out.require(false, "mfd * fc deviates from ft");
            return;
        }
    }
}

void property_pearson(Outcome& out) {
    SplitMix rng{2717ULL};
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + static_cast<int>(rng.next() % 38);
        std::vector<double> x(n), y(n), xa(n);
        const double a = rng.uniform(0.1, 10.0) * (rng.unit() < 0.5 ? -1.0 : 1.0);
        const double b = rng.uniform(-100.0, 100.0);
        for (int i = 0; i < n; ++i) {
            x[i] = rng.uniform(-50.0, 50.0);
            y[i] = rng.uniform(-50.0, 50.0);
            xa[i] = a * x[i] + b;
        }
        const double r = metrics::pearson_r(x, y);
        const double ra = metrics::pearson_r(xa, y);
        if (std::abs(ra - (a > 0 ? r : -r)) > 1e-12) {
            out.require(false, "pearson affine invariance exceeded 1e-12");
            return;
        }
    }
}

void property_propagation(Outcome& out, const fs::path& work) {
    const fs::path dir = work / "prop";
    synth::SceneSpec spec;
    spec.seed = 41;
    spec.size = 128;
    spec.view_count = 3;
    spec.aois = {synth::AoiSeed{"H1", "hazard one", geometry::BoundingBox{40, 40, 88, 88}}};
    const synth::Scene scene = synth::generate_scene(spec);
    synth::write_scene(scene, dir.string());

    std::vector<std::string> paths;
    for (int i = 0; i < spec.view_count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "view_%03d.png", i);
        paths.push_back((dir / "refs" / name).string());
    }
    registry::Registry reg = registry::build_registry(paths, (dir / "poses.csv").string());
    reg = registry::seed_aoi(reg, "H1", "hazard one", "view_000",
                             geometry::BoundingBox{40, 40, 88, 88});

    const auto [once, rep1] = registry::propagate_aois(reg);
    out.require(rep1.uncovered.empty(), "first propagation left views uncovered");
    const auto [twice, rep2] = registry::propagate_aois(once);
    out.require(rep2.propagated.empty(), "second propagation relinked images");
    out.require(once.aois == twice.aois, "propagation is not idempotent");
}

Outcome criterion_properties(const fs::path& work) {
    Outcome out;
    property_geometry(out);
    property_matcher(out);
    property_dwells(out);
    property_metrics(out);
    property_pearson(out);
    property_propagation(out, work);
    return out;
}

// ---- criterion 7: seeded determinism through the CLI ----

Outcome criterion_determinism(const fs::path& work) {
    Outcome out;
    const fs::path dir = work / "determinism";
    const fs::path log = dir / "cli.log";
    fs::create_directories(dir);

    write_file(dir / "spec.json", R"({
  "seed": 5,
  "size": 128,
  "view_count": 2,
  "aois": [{"aoi_id": "H1", "label": "hazard one", "box": [40, 40, 88, 88]}],
  "script": {
    "seed": 9,
    "events": [
      {"kind": "fixate", "target": [64, 64], "duration_ms": 300},
      {"kind": "saccade", "duration_ms": 40},
      {"kind": "fixate", "target": [90, 60], "duration_ms": 300}
    ]
  }
})");

    const std::string synth_cmd = "synth --spec " + (dir / "spec.json").string() + " --out " +
                                  (dir / "data").string() + " --seed 5";
    out.require(run_cli(synth_cmd, log) == 0, "synth failed: " + read_file(log));
    if (!out.ok) return out;
    fs::copy(dir / "data", dir / "data_first", fs::copy_options::recursive);
    fs::remove_all(dir / "data");
    out.require(run_cli(synth_cmd, log) == 0, "synth rerun failed: " + read_file(log));
    if (!out.ok) return out;
    std::string why;
    out.require(trees_equal(dir / "data", dir / "data_first", &why),
                "synth outputs differ across runs: " + why);

    const std::string reg = (dir / "reg").string();
    out.require(run_cli("build-registry --frames " + (dir / "data/scene/refs").string() +
                            " --out " + reg,
                        log) == 0,
                "build-registry failed: " + read_file(log));
    out.require(run_cli("annotate --registry " + reg +
                            " --aoi H1 --label \"hazard one\" --image view_000 --box 40,40,88,88",
                        log) == 0,
                "annotate failed: " + read_file(log));
    out.require(run_cli("propagate --registry " + reg, log) == 0,
                "propagate failed: " + read_file(log));
    if (!out.ok) return out;

    const std::string analyze_cmd = "analyze --registry " + reg + " --frames " +
                                    (dir / "data/session").string() + " --gaze " +
                                    (dir / "data/session/gaze.csv").string() + " --out " +
                                    (dir / "report.json").string() + " --seed 5 --deterministic";
    out.require(run_cli(analyze_cmd, log) == 0, "analyze failed: " + read_file(log));
    if (!out.ok) return out;
    const std::string first = read_file(dir / "report.json");
    out.require(run_cli(analyze_cmd, log) == 0, "analyze rerun failed: " + read_file(log));
    out.require(read_file(dir / "report.json") == first,
                "analyze reports differ across runs");
    return out;
}

} // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / "gazereg_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
        double budget_s;
    };
    const std::vector<Criterion> criteria = {
        {"search-metric arithmetic", [] { return criterion_metric_arithmetic(); }, 1.0},
        {"dwell validation accuracies", [] { return criterion_validation_accuracy(); }, 1.0},
        {"correlation p-values", [] { return criterion_p_values(); }, 1.0},
        {"homography recovery under noise and outliers",
         [] { return criterion_homography_recovery(); }, 30.0},
        {"end-to-end synthetic oracle via the CLI",
         [&work] { return criterion_end_to_end(work); }, 60.0},
        {"property suites", [&work] { return criterion_properties(work); }, 60.0},
        {"seeded determinism via the CLI", [&work] { return criterion_determinism(work); }, 60.0},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].run();
        } catch (const std::exception& e) {
            out.ok = false;
            out.notes.push_back(std::string("unexpected exception: ") + e.what());
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (seconds > criteria[i].budget_s) {
            out.ok = false;
            out.notes.push_back("exceeded the " + std::to_string(criteria[i].budget_s) +
                                " s budget");
        }
        std::printf("[%s] %zu. %s (%.2f s)\n", out.ok ? "PASS" : "FAIL", i + 1, criteria[i].name,
                    seconds);
        for (const auto& note : out.notes)
            if (!out.ok || note.rfind("recovered", 0) == 0 || note.rfind("dwells", 0) == 0)
                std::printf("       %s\n", note.c_str());
        if (!out.ok) ++failures;
    }

    if (failures != 0) {
        std::printf("acceptance: %d of %zu criteria FAILED\n", failures, criteria.size());
        return 1;
    }
    std::printf("acceptance: all %zu criteria passed\n", criteria.size());
    return 0;
}
