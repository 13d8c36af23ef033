#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

// Exercises the installed binary the way a user would: real process, real
// exit codes, real files. GAZEREG_CLI_PATH is injected by the build.

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("gazereg_" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout and stderr, interleaved
};

/// Runs the CLI with `args`, capturing combined output. The 128-255 range
/// from system() is folded back to the raw exit code.
RunResult run_cli(const std::string& args, const std::string& capture_file) {
    const std::string cmd =
        std::string(GAZEREG_CLI_PATH) + " " + args + " > " + capture_file + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(capture_file);
    std::ostringstream text;
    text << in.rdbuf();
    res.output = text.str();
    return res;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

bool trees_equal(const fs::path& a, const fs::path& b) {
    std::vector<std::string> rel_a, rel_b;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a).string());
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b).string());
    std::sort(rel_a.begin(), rel_a.end());
    std::sort(rel_b.begin(), rel_b.end());
    if (rel_a != rel_b) return false;
    for (const auto& rel : rel_a)
        if (read_file((a / rel).string()) != read_file((b / rel).string())) return false;
    return true;
}

/// One shared synthetic workspace: a 4-view scene with two AOIs plus a
/// scripted session over it. Building registries is the slow part, so the
/// workflow cases share this fixture through the test order.
const TempDir& workspace() {
    static TempDir dir("cli_ws");
    static bool ready = false;
    if (!ready) {
        write_file(dir.file("spec.json"), R"({
  "seed": 7,
  "size": 256,
  "view_count": 4,
  "warp": {"rotation_rad": 0.15, "scale_min": 0.92, "scale_max": 1.08,
           "translation_px": 14.0, "projective": 0.0},
  "aois": [
    {"aoi_id": "H1", "label": "hazard one", "box": [96, 96, 164, 160]},
    {"aoi_id": "H2", "label": "hazard two", "box": [60, 156, 116, 212]}
  ],
  "script": {
    "seed": 123,
    "events": [
      {"kind": "fixate", "target": [130, 128], "duration_ms": 480},
      {"kind": "saccade", "duration_ms": 40},
      {"kind": "fixate", "target": [88, 184], "duration_ms": 480},
      {"kind": "fixate", "target": [200, 40], "duration_ms": 480}
    ]
  }
})");
        const RunResult synth =
            run_cli("synth --spec " + dir.file("spec.json") + " --out " + dir.file("data"),
                    dir.file("synth.log"));
        REQUIRE(synth.exit_code == 0);
        const RunResult build = run_cli("build-registry --frames " + dir.file("data/scene/refs") +
                                            " --out " + dir.file("reg") + " --poses " +
                                            dir.file("data/scene/poses.csv"),
                                        dir.file("build.log"));
        REQUIRE(build.exit_code == 0);
        ready = true;
    }
    return dir;
}

} // namespace

TEST_CASE("build-registry features a directory and reports counts") {
    const TempDir& ws = workspace();
    const std::string log = read_file(ws.file("build.log"));
    CHECK(log.find("registry: 4 images") != std::string::npos);
    CHECK(fs::exists(ws.file("reg/manifest.json")));
    CHECK(fs::exists(ws.file("reg/descriptors.bin")));

    const json manifest = json::parse(read_file(ws.file("reg/manifest.json")));
    CHECK(manifest.at("images").size() == 4);
}

TEST_CASE("build-registry rejects a missing directory and a corrupt image") {
    TempDir dir("cli_build_bad");
    const RunResult missing = run_cli("build-registry --frames " + dir.file("nope") + " --out " +
                                          dir.file("reg"),
                                      dir.file("log"));
    CHECK(missing.exit_code == 2);

    const TempDir& ws = workspace();
    fs::create_directories(dir.file("imgs"));
    fs::copy_file(ws.file("data/scene/refs/view_000.png"), dir.file("imgs/view_000.png"));
    write_file(dir.file("imgs/view_001.png"), "not a png");
    const RunResult corrupt = run_cli("build-registry --frames " + dir.file("imgs") + " --out " +
                                          dir.file("reg"),
                                      dir.file("log"));
    CHECK(corrupt.exit_code == 2);
    CHECK(corrupt.output.find("view_001.png") != std::string::npos);
}

TEST_CASE("annotating and propagating covers every view") {
    const TempDir& ws = workspace();
    const RunResult a1 = run_cli("annotate --registry " + ws.file("reg") +
                                     " --aoi H1 --label \"hazard one\" --image view_000 "
                                     "--box 96,96,164,160",
                                 ws.file("log"));
    REQUIRE(a1.exit_code == 0);
    const RunResult a2 = run_cli("annotate --registry " + ws.file("reg") +
                                     " --aoi H2 --label \"hazard two\" --image view_000 "
                                     "--box 60,156,116,212",
                                 ws.file("log"));
    REQUIRE(a2.exit_code == 0);

    const RunResult prop = run_cli("propagate --registry " + ws.file("reg"), ws.file("log"));
    REQUIRE(prop.exit_code == 0);
    CHECK(prop.output.find("coverage: 4/4 images") != std::string::npos);
    CHECK(prop.output.find("uncovered 0") != std::string::npos);
}

TEST_CASE("annotate rejects an unknown image and an inverted box") {
    const TempDir& ws = workspace();
    const RunResult unknown = run_cli("annotate --registry " + ws.file("reg") +
                                          " --aoi H9 --label x --image view_099 --box 1,1,2,2",
                                      ws.file("log"));
    CHECK(unknown.exit_code == 2);
    CHECK(unknown.output.find("view_099") != std::string::npos);

    const RunResult inverted = run_cli("annotate --registry " + ws.file("reg") +
                                           " --aoi H9 --label x --image view_000 --box 50,50,10,90",
                                       ws.file("log"));
    CHECK(inverted.exit_code == 2);
}

TEST_CASE("propagate without seeds exits 2 and names the failure") {
    TempDir dir("cli_noseeds");
    const TempDir& ws = workspace();
    const RunResult build = run_cli("build-registry --frames " + ws.file("data/scene/refs") +
                                        " --out " + dir.file("bare"),
                                    dir.file("log"));
    REQUIRE(build.exit_code == 0);
    const RunResult prop = run_cli("propagate --registry " + dir.file("bare"), dir.file("log"));
    CHECK(prop.exit_code == 2);
    CHECK(prop.output.find("NoSeeds") != std::string::npos);
}

TEST_CASE("analyze recovers the scripted truth through the real binary") {
    const TempDir& ws = workspace();
    const RunResult res = run_cli("analyze --registry " + ws.file("reg") + " --frames " +
                                      ws.file("data/session") + " --gaze " +
                                      ws.file("data/session/gaze.csv") + " --out " +
                                      ws.file("report.json") + " --deterministic",
                                  ws.file("log"));
    REQUIRE(res.exit_code == 0);

    const json report = json::parse(read_file(ws.file("report.json")));
    const json truth = json::parse(read_file(ws.file("data/session/truth.json")));

    // Every truth dwell comes back with the right AOI and a duration within
    // one frame period.
    REQUIRE(report.at("dwells").size() == truth.at("dwells").size());
    for (std::size_t i = 0; i < truth.at("dwells").size(); ++i) {
        const json& want = truth.at("dwells").at(i);
        const json& got = report.at("dwells").at(i);
        CHECK(got.at("aoi_id") == want.at("aoi_id"));
        CHECK(std::abs(got.at("duration_ms").get<double>() -
                       want.at("duration_ms").get<double>()) <= 40.0);
    }

    // The report embeds its config, the version, and diagnostics per frame.
    CHECK(report.at("config").at("subcommand") == "analyze");
    CHECK(report.at("config").at("min_inliers") == 15);
    CHECK(report.at("version") == "0.1.0");
    CHECK(!report.contains("generated_at"));
    CHECK(report.at("frames").size() == truth.at("frame_views").size());
    CHECK(report.at("localization").at("frames_localized").get<int>() > 0);
    CHECK(report.at("warnings").empty());
    CHECK(report.at("trajectory").size() == report.at("frames").size());
}

TEST_CASE("analyze exits 2 on a non-monotonic gaze log, naming the line") {
    const TempDir& ws = workspace();
    write_file(ws.file("bad_gaze.csv"), "t_ms,x_px,y_px,valid\n0,1,1,1\n5,2,2,1\n3,3,3,1\n");
    const RunResult res = run_cli("analyze --registry " + ws.file("reg") + " --frames " +
                                      ws.file("data/session") + " --gaze " +
                                      ws.file("bad_gaze.csv") + " --out " + ws.file("r.json"),
                                  ws.file("log"));
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("line 4") != std::string::npos);
}

TEST_CASE("analyze against an unrelated registry degrades with a warning, not an error") {
    const TempDir& ws = workspace();
    TempDir dir("cli_unrelated");
    write_file(dir.file("spec.json"), R"({"seed": 99, "texture": "noise", "view_count": 2})");
    const RunResult synth = run_cli("synth --spec " + dir.file("spec.json") + " --out " +
                                        dir.file("other"),
                                    dir.file("log"));
    REQUIRE(synth.exit_code == 0);
    const RunResult build = run_cli("build-registry --frames " + dir.file("other/scene/refs") +
                                        " --out " + dir.file("reg"),
                                    dir.file("log"));
    REQUIRE(build.exit_code == 0);

    const RunResult res = run_cli("analyze --registry " + dir.file("reg") + " --frames " +
                                      ws.file("data/session") + " --gaze " +
                                      ws.file("data/session/gaze.csv") + " --out " +
                                      dir.file("report.json") + " --deterministic",
                                  dir.file("log"));
    REQUIRE(res.exit_code == 0);
    const json report = json::parse(read_file(dir.file("report.json")));
    CHECK(report.at("dwells").empty());
    CHECK(report.at("localization").at("frames_localized") == 0);
    REQUIRE(report.at("warnings").size() == 1);
}

TEST_CASE("correlate emits the table shape and flags 2 on bad input") {
    TempDir dir("cli_correlate");
    write_file(dir.file("workers.csv"),
               "worker_id,av_hri,sd_ms,ft_ms,fc,mfd_ms,roaft,fr\n"
               "w1,0.2,1000,400,10,40,0.30,0.20\n"
               "w2,0.4,2000,800,20,42,0.40,0.30\n"
               "w3,0.6,3000,1200,30,44,0.50,0.40\n"
               "w4,0.8,4000,1600,40,46,0.60,0.50\n");
    const RunResult res = run_cli("correlate --workers " + dir.file("workers.csv") + " --out " +
                                      dir.file("table1.json") + " --csv " + dir.file("table1.csv") +
                                      " --deterministic",
                                  dir.file("log"));
    REQUIRE(res.exit_code == 0);

    // A planted exact linear relation correlates at r = 1 on every metric.
    const json table = json::parse(read_file(dir.file("table1.json")));
    REQUIRE(table.at("rows").size() == 6);
    for (const json& row : table.at("rows")) {
        CHECK(row.at("r").get<double>() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(row.at("n") == 4);
    }
    const std::string csv = read_file(dir.file("table1.csv"));
    CHECK(csv.find("metric,r,p,n") == 0);
    CHECK(csv.find("SD,1.000,0.000,4") != std::string::npos);

    write_file(dir.file("bad.csv"), "who,what\nw1,2\n");
    const RunResult bad = run_cli("correlate --workers " + dir.file("bad.csv") + " --out -",
                                  dir.file("log"));
    CHECK(bad.exit_code == 2);
}

TEST_CASE("validate reproduces the dwell-accuracy arithmetic and rejects key mismatches") {
    TempDir dir("cli_validate");
    write_file(dir.file("system.csv"),
               "aoi_id,dwell_ms\nD1,900\nD2,235\nD3,257\nD4,1148\nD5,1270\n");
    write_file(dir.file("manual.csv"),
               "aoi_id,dwell_ms\nD1,744\nD2,248\nD3,248\nD4,992\nD5,992\n");
    const RunResult res = run_cli("validate --system " + dir.file("system.csv") + " --manual " +
                                      dir.file("manual.csv") + " --out " + dir.file("table4.json") +
                                      " --csv " + dir.file("table4.csv") + " --deterministic",
                                  dir.file("log"));
    REQUIRE(res.exit_code == 0);

    const json table = json::parse(read_file(dir.file("table4.json")));
    const std::vector<int> want = {83, 94, 96, 86, 78};
    REQUIRE(table.at("rows").size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(table.at("rows").at(i).at("accuracy_pct") == want[i]);
    CHECK(table.at("mean_accuracy_pct") == 88);
    CHECK(read_file(dir.file("table4.csv")).find("mean,,,,88") != std::string::npos);

    write_file(dir.file("manual_short.csv"), "aoi_id,dwell_ms\nD1,744\n");
    const RunResult mismatch = run_cli("validate --system " + dir.file("system.csv") +
                                           " --manual " + dir.file("manual_short.csv"),
                                       dir.file("log"));
    CHECK(mismatch.exit_code == 2);
    CHECK(mismatch.output.find("KeyMismatch") != std::string::npos);
}

TEST_CASE("synth is byte-deterministic per seed and validates its spec") {
    TempDir dir("cli_synth");
    write_file(dir.file("spec.json"), "{}");
    const RunResult r1 = run_cli("synth --spec " + dir.file("spec.json") + " --out " +
                                     dir.file("out") + " --seed 42",
                                 dir.file("log"));
    REQUIRE(r1.exit_code == 0);
    fs::copy(dir.file("out"), dir.file("out_copy"), fs::copy_options::recursive);
    fs::remove_all(dir.file("out"));
    const RunResult r2 = run_cli("synth --spec " + dir.file("spec.json") + " --out " +
                                     dir.file("out") + " --seed 42",
                                 dir.file("log"));
    REQUIRE(r2.exit_code == 0);
    CHECK(trees_equal(dir.file("out"), dir.file("out_copy")));

    // The default spec's outputs feed straight back into the pipeline.
    CHECK(fs::exists(dir.file("out/session/frames.json")));
    CHECK(fs::exists(dir.file("out/session/gaze.csv")));
    CHECK(fs::exists(dir.file("out/session/truth.json")));
    CHECK(fs::exists(dir.file("out/spec_resolved.json")));

    write_file(dir.file("bad_warp.json"), R"({"warp": {"scale_min": 0.0}})");
    const RunResult bad = run_cli("synth --spec " + dir.file("bad_warp.json") + " --out " +
                                      dir.file("bad"),
                                  dir.file("log"));
    CHECK(bad.exit_code == 2);
    CHECK(bad.output.find("InvalidWarpRange") != std::string::npos);

    write_file(dir.file("typo.json"), R"({"view_cout": 3})");
    const RunResult typo = run_cli("synth --spec " + dir.file("typo.json") + " --out " +
                                       dir.file("bad2"),
                                   dir.file("log"));
    CHECK(typo.exit_code == 2);
    CHECK(typo.output.find("view_cout") != std::string::npos);
}

TEST_CASE("usage errors exit 2 and --help exits 0") {
    TempDir dir("cli_usage");
    const RunResult missing = run_cli("analyze --registry somewhere", dir.file("log"));
    CHECK(missing.exit_code == 2);
    const RunResult help = run_cli("--help", dir.file("log"));
    CHECK(help.exit_code == 0);
    CHECK(help.output.find("analyze") != std::string::npos);
    const RunResult sub_help = run_cli("analyze --help", dir.file("log"));
    CHECK(sub_help.exit_code == 0);
    // Every default threshold is documented.
    CHECK(sub_help.output.find("25") != std::string::npos);  // dispersion
    CHECK(sub_help.output.find("240") != std::string::npos); // dwell floor
    CHECK(sub_help.output.find("15") != std::string::npos);  // min inliers
}
