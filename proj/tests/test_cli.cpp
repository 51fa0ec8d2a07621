#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "doctest.h"
#include "tailcal/csv.hpp"
#include "tailcal/error.hpp"
#include "tailcal/experiment.hpp"
#include "tailcal/generators.hpp"
#include "tailcal/ingest.hpp"

#include <nlohmann/json.hpp>

using namespace tailcal;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(TAILCAL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch_dir() {
    static const fs::path root = [] {
        fs::path p = fs::temp_directory_path() /
                     ("tailcal_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p;
    }();
    return root;
}

std::string write_config(const std::string& name, const std::string& content) {
    const fs::path p = scratch_dir() / name;
    write_file(p.string(), content);
    return p.string();
}

bool same_tree(const fs::path& a, const fs::path& b) {
    std::vector<std::string> names_a, names_b;
    for (const auto& e : fs::directory_iterator(a)) names_a.push_back(e.path().filename());
    for (const auto& e : fs::directory_iterator(b)) names_b.push_back(e.path().filename());
    std::sort(names_a.begin(), names_a.end());
    std::sort(names_b.begin(), names_b.end());
    if (names_a != names_b) return false;
    for (const std::string& n : names_a) {
        if (read_file((a / n).string()) != read_file((b / n).string())) return false;
    }
    return true;
}

const char* kTinyAudit =
    "[experiment]\n"
    "kind = gaussian_audit\n"
    "seed = 77\n"
    "n_test = 20000\n"
    "\n"
    "[gaussian_audit]\n"
    "n_train = 2000\n";

}  // namespace

TEST_CASE("argument errors exit with code 2") {
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("no-such-subcommand") == 2);
    CHECK(run_cli("gaussian-audit") == 2);  // --config is required
    const std::string bad = write_config("bad.cfg", "[experiment]\nkind = bogus\n");
    CHECK(run_cli("gaussian-audit --config " + bad) == 2);
    // declared kind must match the subcommand
    const std::string audit = write_config("audit.cfg", kTinyAudit);
    CHECK(run_cli("quantile-audit --config " + audit) == 2);
}

TEST_CASE("gaussian audit produces a verifiable manifest") {
    const std::string cfg = write_config("audit.cfg", kTinyAudit);
    const fs::path out = scratch_dir() / "audit_out";
    REQUIRE(run_cli("gaussian-audit --config " + cfg + " --out " + out.string()) == 0);
    for (const char* f :
         {"curve_gaussian.csv", "curve_uniform.csv", "curve_symmetric.csv", "summary.json",
          "manifest.json"}) {
        CHECK(fs::exists(out / f));
    }
    const nlohmann::json manifest = nlohmann::json::parse(read_file((out / "manifest.json").string()));
    CHECK(manifest["experiment"] == "gaussian_audit");
    CHECK(manifest["seed"] == 77);
    for (const auto& [name, hash] : manifest["files"].items()) {
        const std::string content = read_file((out / name).string());
        char want[17];
        std::snprintf(want, sizeof(want), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(content)));
        CHECK(hash.get<std::string>() == want);
    }
    // curves parse back and cover the default grid
    const CalibrationCurve c = curve_from_csv(read_file((out / "curve_gaussian.csv").string()));
    CHECK(c.points.size() == 15);
    CHECK(c.n_test == 20000);
}

TEST_CASE("reruns and thread counts give identical bytes") {
    const std::string cfg = write_config("audit.cfg", kTinyAudit);
    const fs::path a = scratch_dir() / "det_a";
    const fs::path b = scratch_dir() / "det_b";
    const fs::path c = scratch_dir() / "det_c";
    REQUIRE(run_cli("gaussian-audit --config " + cfg + " --out " + a.string() + " --threads 1") == 0);
    REQUIRE(run_cli("gaussian-audit --config " + cfg + " --out " + b.string() + " --threads 1") == 0);
    REQUIRE(run_cli("gaussian-audit --config " + cfg + " --out " + c.string() + " --threads 8") == 0);
    CHECK(same_tree(a, b));
    CHECK(same_tree(a, c));

    // a different seed changes the payload
    const fs::path d = scratch_dir() / "det_d";
    REQUIRE(run_cli("gaussian-audit --config " + cfg + " --out " + d.string() + " --seed 78") == 0);
    CHECK(!same_tree(a, d));
}

TEST_CASE("numerical failures exit with code 4") {
    // a single-draw mode cannot be fitted (zero variance)
    const std::string cfg = write_config("hmm_bad.cfg",
                                         "[experiment]\n"
                                         "kind = hmm_intervals\n"
                                         "\n"
                                         "[mode1]\n"
                                         "count = 1\n");
    const fs::path out = scratch_dir() / "hmm_bad_out";
    CHECK(run_cli("hmm-intervals --config " + cfg + " --out " + out.string()) == 4);
}

TEST_CASE("ingest round trip is a fixed point") {
    IngestSchema schema;
    schema.context_columns = {"speed", "neighbor"};
    schema.mode_column = "mode";
    schema.sample_rate = 5.0;
    schema.segment_seconds = 10.0;
    const Dataset lane = gen_lane_trajectories(20, 0.3, 5.0, CounterRng(1234, 1));
    const std::string csv = dataset_to_csv(lane, schema);

    const IngestReport r1 = ingest_scenarios_text(csv, "mem", schema);
    CHECK(r1.malformed_lines.empty());
    CHECK(r1.partial_segments == 0);
    REQUIRE(r1.dataset.scenarios.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(r1.dataset.scenarios[i].trajectory == lane.scenarios[i].trajectory);
        CHECK(r1.dataset.scenarios[i].context == lane.scenarios[i].context);
        CHECK(r1.dataset.scenarios[i].mode_label == lane.scenarios[i].mode_label);
    }
    const std::string csv2 = dataset_to_csv(r1.dataset, schema);
    const IngestReport r2 = ingest_scenarios_text(csv2, "mem", schema);
    CHECK(csv == csv2);
    REQUIRE(r2.dataset.scenarios.size() == r1.dataset.scenarios.size());
    for (std::size_t i = 0; i < r1.dataset.scenarios.size(); ++i) {
        CHECK(r2.dataset.scenarios[i].trajectory == r1.dataset.scenarios[i].trajectory);
    }
}

TEST_CASE("malformed rows are skipped and reported") {
    IngestSchema schema;
    schema.sample_rate = 5.0;
    schema.segment_seconds = 2.0;  // 11 rows per segment
    std::string csv = "track_id,frame,x,y\n";
    std::size_t corrupt_line = 0;
    std::size_t line = 1;
    for (int track = 0; track < 100; ++track) {
        for (int t = 0; t <= 10; ++t) {
            ++line;
            if (track == 37 && t == 5) {
                csv += std::to_string(track) + "," + std::to_string(t) + ",oops,0.0\n";
                corrupt_line = line;
            } else {
                csv += std::to_string(track) + "," + std::to_string(t) + "," +
                       std::to_string(0.1 * t) + ",0.0\n";
            }
        }
    }
    const IngestReport r = ingest_scenarios_text(csv, "mem", schema);
    CHECK(r.dataset.scenarios.size() == 99);
    REQUIRE(r.malformed_lines.size() == 1);
    CHECK(r.malformed_lines[0] == corrupt_line);
    CHECK(r.partial_segments == 1);  // track 37 keeps 10 of 11 rows
}

TEST_CASE("long tracks window into overlapping segments") {
    IngestSchema schema;  // 25 Hz, 10 s segments
    std::string csv = "track_id,frame,x,y\n";
    for (int t = 0; t < 626; ++t) {  // 25 s of track
        csv += "7," + std::to_string(t) + "," + std::to_string(0.04 * t) + ",1.0\n";
    }
    const IngestReport r = ingest_scenarios_text(csv, "mem", schema);
    REQUIRE(r.dataset.scenarios.size() == 2);
    CHECK(r.partial_segments == 1);
    // consecutive segments share their boundary sample
    CHECK(r.dataset.scenarios[0].trajectory.positions().back() ==
          r.dataset.scenarios[1].trajectory.positions().front());
    CHECK(r.dataset.scenarios[0].trajectory.size() == 251);

    // rows arriving out of order land in the same segments
    std::string shuffled = "track_id,frame,x,y\n";
    for (int t = 625; t >= 0; --t) {
        shuffled += "7," + std::to_string(t) + "," + std::to_string(0.04 * t) + ",1.0\n";
    }
    const IngestReport r2 = ingest_scenarios_text(shuffled, "mem", schema);
    REQUIRE(r2.dataset.scenarios.size() == 2);
    CHECK(r2.dataset.scenarios[0].trajectory == r.dataset.scenarios[0].trajectory);

    CHECK_THROWS_AS(ingest_scenarios_text("track_id,frame,x\n", "mem", schema), Error);
    CHECK_THROWS_AS(ingest_scenarios_text("track_id,frame,x,y\n7,0,0.0,0.0\n", "mem", schema),
                    Error);  // no full segment
}

TEST_CASE("ingest and export-tube subcommands") {
    IngestSchema schema;
    schema.mode_column = "mode";
    schema.sample_rate = 5.0;
    const Dataset lane = gen_lane_trajectories(30, 0.5, 5.0, CounterRng(4321, 1));
    Dataset stripped = lane;  // CSV schema here carries no context columns
    for (Scenario& s : stripped.scenarios) s.context.features.clear();
    const fs::path data = scratch_dir() / "lane.csv";
    write_dataset_csv(data.string(), stripped, schema);

    const std::string cfg = write_config("ingest.cfg",
                                         "[ingest]\n"
                                         "path = " + data.string() + "\n" +
                                         "mode_column = mode\n"
                                         "sample_rate = 5\n"
                                         "\n"
                                         "[export_tube]\n"
                                         "levels = 0,5\n"
                                         "split_time = 2\n");
    CHECK(run_cli("ingest --config " + cfg) == 0);

    const fs::path out = scratch_dir() / "tube_out";
    REQUIRE(run_cli("export-tube --config " + cfg + " --out " + out.string()) == 0);
    const std::string tube = read_file((out / "tube.csv").string());
    CHECK(tube.substr(0, tube.find('\n')) == "t,center_x,center_y,sigma_lat,halfwidth_0,halfwidth_5");
    // level 0 boundary collapses onto the center; level 5 is five sigmas
    std::istringstream lines(tube);
    std::string row;
    std::getline(lines, row);
    std::size_t rows = 0;
    while (std::getline(lines, row)) {
        ++rows;
        const auto p1 = row.rfind(',');
        const auto body = row.substr(0, p1);
        const auto p0 = body.rfind(',');
        const double h0 = std::strtod(body.substr(p0 + 1).c_str(), nullptr);
        const double h5 = std::strtod(row.substr(p1 + 1).c_str(), nullptr);
        const auto sigma_start = body.rfind(',', p0 - 1);
        const double sigma =
            std::strtod(body.substr(sigma_start + 1, p0 - sigma_start - 1).c_str(), nullptr);
        CHECK(h0 == 0.0);
        CHECK(h5 == doctest::Approx(5.0 * sigma).epsilon(1e-12));
    }
    CHECK(rows == 41);  // 8 s action at 5 Hz, endpoints inclusive

    // missing dataset file is a data error
    const std::string gone = write_config("gone.cfg",
                                          "[ingest]\npath = /nonexistent/never.csv\n");
    CHECK(run_cli("ingest --config " + gone) == 3);
}
