// End-to-end acceptance gate. Each criterion prints exactly one PASS/FAIL
// line; the exit code is the number of failed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <unistd.h>

#include "tailcal/calibration.hpp"
#include "tailcal/csv.hpp"
#include "tailcal/error.hpp"
#include "tailcal/experiment.hpp"
#include "tailcal/gaussian.hpp"
#include "tailcal/generators.hpp"
#include "tailcal/gmm.hpp"
#include "tailcal/model.hpp"
#include "tailcal/trajectory.hpp"
#include "tailcal/tube.hpp"
#include "tailcal/two_mode.hpp"

using namespace tailcal;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int g_failures = 0;

void report(int num, const std::string& label, bool pass, const std::string& detail = "") {
    std::printf("%s criterion %d: %s%s%s%s\n", pass ? "PASS" : "FAIL", num, label.c_str(),
                detail.empty() ? "" : " (", detail.c_str(), detail.empty() ? "" : ")");
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

fs::path scratch(const std::string& name) {
    static const fs::path root = [] {
        fs::path p = fs::temp_directory_path() /
                     ("tailcal_acceptance_" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p;
    }();
    const fs::path p = root / name;
    fs::create_directories(p);
    return p;
}

void run_recipe(const std::string& kind, const std::string& config_text, const fs::path& out,
                int threads) {
    ExperimentConfig cfg;
    cfg.raw = Config::parse_string(config_text);
    cfg.kind = experiment_kind_from_name(kind);
    cfg.rng.seed = cfg.raw.get_u64("experiment.seed", 12345);
    cfg.rng.stream_id = cfg.raw.get_u64("experiment.stream_id", 1);
    cfg.out_dir = out.string();
    cfg.threads = threads;
    run_experiment(cfg);
}

CalibrationCurve load_curve(const fs::path& p) { return curve_from_csv(read_file(p.string())); }

json load_json(const fs::path& p) { return json::parse(read_file(p.string())); }

bool same_tree(const fs::path& a, const fs::path& b) {
    std::vector<std::string> na, nb;
    for (const auto& e : fs::directory_iterator(a)) na.push_back(e.path().filename());
    for (const auto& e : fs::directory_iterator(b)) nb.push_back(e.path().filename());
    std::sort(na.begin(), na.end());
    std::sort(nb.begin(), nb.end());
    if (na != nb) return false;
    for (const std::string& n : na) {
        if (read_file((a / n).string()) != read_file((b / n).string())) return false;
    }
    return true;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// ----- criteria 1 and 2: three-generator audit at full scale, timed -----

void criteria_1_2() {
    const std::string cfg =
        "[experiment]\n"
        "kind = gaussian_audit\n"
        "seed = 12345\n"
        "n_test = 10000000\n"
        "[gaussian_audit]\n"
        "n_train = 10000\n";
    const fs::path out = scratch("c1_gaussian_audit");
    const auto t0 = std::chrono::steady_clock::now();
    run_recipe("gaussian_audit", cfg, out, 1);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const CalibrationCurve gauss = load_curve(out / "curve_gaussian.csv");
    bool c1 = secs <= 60.0;
    double worst = 0.0;
    for (const CurvePoint& p : gauss.points) {
        if (p.delta < 1e-5 * (1.0 - 1e-9)) continue;
        worst = std::max(worst, std::abs(p.log10_ratio));
        if (!(std::abs(p.log10_ratio) <= 0.3)) c1 = false;
    }
    report(1, "Gaussian-on-Gaussian |log10 ratio| <= 0.3 for delta >= 1e-5, <= 60 s", c1,
           "worst |log10 ratio| " + fmt(worst) + ", " + fmt(secs) + " s single-threaded");

    const CalibrationCurve uni = load_curve(out / "curve_uniform.csv");
    const CalibrationCurve sym = load_curve(out / "curve_symmetric.csv");
    bool conservative = true;
    for (const CurvePoint& p : uni.points) {
        if (p.delta <= 1e-3 * (1.0 + 1e-9) && !(p.ratio <= 0.5)) conservative = false;
    }
    bool dangerous = false;
    for (const CurvePoint& p : sym.points) {
        if (p.delta <= 1e-3 * (1.0 + 1e-9) && p.ratio >= 2.0) dangerous = true;
    }
    report(2, "uniform noise conservative (ratio <= 0.5), symmetric noise dangerous (ratio >= 2)",
           conservative && dangerous);
}

// ----- criterion 3: GMM does not rescue the symmetric-noise tail -----

void criterion_3() {
    const std::string cfg =
        "[experiment]\n"
        "kind = gmm_audit\n"
        "seed = 12345\n"
        "n_test = 10000000\n"
        "[gmm_audit]\n"
        "n_train = 10000\n"
        "mc_samples = 1000000\n";
    const fs::path out = scratch("c3_gmm_audit");
    run_recipe("gmm_audit", cfg, out, 8);
    bool pass = true;
    std::string detail;
    for (int k : {2, 3, 4}) {
        const CalibrationCurve c = load_curve(out / ("curve_k" + std::to_string(k) + ".csv"));
        double worst = 0.0;
        for (const CurvePoint& p : c.points) {
            if (p.delta > 1e-4 * (1.0 + 1e-9)) continue;
            worst = std::max(worst, p.observed_count == 0
                                        ? std::numeric_limits<double>::infinity()
                                        : std::abs(p.log10_ratio));
        }
        if (!(worst > 0.5)) pass = false;
        detail += "k=" + std::to_string(k) + " worst " + fmt(worst) + " ";
    }
    report(3, "GMM K in {2,3,4} still miscalibrated at some delta <= 1e-4", pass, detail);
}

// ----- criterion 4: quantile tube accuracy threshold -----

void criterion_4() {
    const std::string cfg =
        "[experiment]\n"
        "kind = quantile_audit\n"
        "seed = 12345\n"
        "n_test = 10000000\n"
        "[quantile_audit]\n"
        "n_train = 1000000\n";
    const fs::path out = scratch("c4_quantile_audit");
    run_recipe("quantile_audit", cfg, out, 8);
    const json summary = load_json(out / "summary.json");
    const CalibrationCurve curve = load_curve(out / "curve.csv");

    bool in_band = false;
    std::string dm_str = "undefined";
    if (summary["curve"].contains("delta_min") && !summary["curve"]["delta_min"].is_null()) {
        const double dm = summary["curve"]["delta_min"].get<double>();
        dm_str = fmt(dm);
        in_band = dm >= 1e-4 * (1.0 - 1e-9) && dm <= std::pow(10.0, -2.5) * (1.0 + 1e-9);
    }
    const DeltaMinResult res = delta_min(curve, 0.5);
    bool deep_inaccurate = false;
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        if (curve.points[i].delta <= std::pow(10.0, -4.5) * (1.0 + 1e-9) && !res.accurate[i]) {
            deep_inaccurate = true;
        }
    }
    report(4, "quantile delta_min in [1e-4, 10^-2.5] and inaccuracy below 10^-4.5",
           in_band && deep_inaccurate, "delta_min " + dm_str);
}

// ----- criterion 5: scaling law fit and extrapolation -----

void criterion_5() {
    // quarter-decade grid: the half-decade default leaves too few distinct
    // delta_min levels for a stable slope at this seed
    std::string grid;
    for (int k = 4; k <= 32; ++k) {
        if (!grid.empty()) grid += ",";
        grid += format_double(std::pow(10.0, -0.25 * k));
    }
    const std::string cfg =
        "[experiment]\n"
        "kind = quantile_scaling\n"
        "seed = 12345\n"
        "grid = " + grid + "\n";
    const fs::path out = scratch("c5_quantile_scaling");
    run_recipe("quantile_scaling", cfg, out, 8);
    const json s = load_json(out / "summary.json");
    const double slope = s["slope"].get<double>();
    const double r2 = s["r2"].get<double>();
    const double extra = s["extrapolated_n"].get<double>();
    const bool pass = slope >= -1.25 && slope <= -0.8 && r2 >= 0.95 && extra > 1e9;
    report(5, "scaling slope in [-1.25, -0.8], r2 >= 0.95, extrapolate(1e-8) > 1e9", pass,
           "slope " + fmt(slope) + ", r2 " + fmt(r2) + ", extrapolated N " + fmt(extra));
}

// ----- criterion 6: noisy-rational curves identical to Gaussian -----

void criterion_6() {
    const CounterRng rng(4242, 1);
    const std::vector<Vec2> train = gen_gaussian_2d(10'000, {0.0, 0.0}, {}, rng);
    const std::vector<Vec2> test = gen_gaussian_2d(1'000'000, {0.0, 0.0}, {}, rng.substream(1));
    FittedModel a;
    a.cls = ModelClass::gaussian;
    a.gaussian = fit_gaussian(train);
    FittedModel b;
    b.cls = ModelClass::noisy_rational;
    b.gaussian = fit_noisy_rational(train);
    const ActionSet as = ActionSet::from_points(test);
    const DeltaGrid grid = DeltaGrid::default_grid();
    const std::string csv_a = curve_to_csv(calibration_curve(a, as, grid, 8));
    const std::string csv_b = curve_to_csv(calibration_curve(b, as, grid, 8));
    report(6, "noisy-rational calibration curve byte-identical to Gaussian", csv_a == csv_b);
}

// ----- criterion 7: scenario bound soundness -----

void criterion_7() {
    const std::size_t reps = 200, n_train = 500, n_mc = 1'000'000;
    std::size_t exceed = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        const std::vector<Vec2> train =
            gen_gaussian_2d(n_train, {0.0, 0.0}, {}, CounterRng(777, r + 1));
        const ScenarioHull hull = fit_scenario_hull(ActionSet::from_points(train));
        const double eps = campi_violation_bound(n_train, hull.support_count, 0.01);
        const CounterRng mc(778, r + 1);
        std::size_t outside = 0;
        for (std::size_t i = 0; i < n_mc; ++i) {
            const Vec2 p{mc.normal(2 * i), mc.normal(2 * i + 1)};
            if (!hull.sections[0].contains(p)) ++outside;
        }
        if (static_cast<double>(outside) / static_cast<double>(n_mc) > eps) ++exceed;
    }
    const double e40k = campi_violation_bound(40'000, 1, 0.01);
    const bool pass = exceed <= 5 && e40k >= std::pow(10.0, -4.2) && e40k <= std::pow(10.0, -3.8);
    report(7, "campi bound sound over 200 hulls; N=40000 epsilon near 1e-4", pass,
           std::to_string(exceed) + "/200 exceedances, epsilon(40000,1,0.01) " + fmt(e40k));
}

// ----- criterion 8: two-mode gray regions -----

void criterion_8() {
    const TwoModeClassifier exact{-1.0, 0.5, 1.0, 0.5};
    const DecisionIntervals di = decision_intervals(exact, 1e-8, -6.0, 6.0, 8192);
    bool part1 = di.gray.size() == 1 && std::abs(di.gray[0].lo + 2.3026) <= 1e-3 &&
                 std::abs(di.gray[0].hi - 2.3026) <= 1e-3;

    ModeSpec m1{ModeSpec::Dist::uniform, -2.0, 1.0, 20'000};
    ModeSpec m2{ModeSpec::Dist::uniform, -1.0, 2.0, 20'000};
    const auto [xs1, xs2] = gen_two_mode_1d(m1, m2, CounterRng(56, 1));
    const TwoModeClassifier fitted = fit_two_mode_classifier(xs1, xs2);
    const DecisionIntervals du = decision_intervals(fitted, 1e-8, -2.0, 2.0, 8192);
    const bool part2 = du.mode1.empty() && du.mode2.empty() && du.gray.size() == 1 &&
                       du.gray[0].lo == -2.0 && du.gray[0].hi == 2.0;
    report(8, "gray endpoints at +-2.3026 for exact modes; overlap grays the full range",
           part1 && part2);
}

// ----- criterion 9: analytic radii -----

void criterion_9() {
    bool pass = true;
    for (int k = 1; k <= 8; ++k) {
        const double delta = std::pow(10.0, -k);
        const double want = std::sqrt(-2.0 * std::log(delta));
        const double got = gaussian_region_radius_dim(2, delta);
        if (!(std::abs(got - want) <= 1e-10 * want)) pass = false;
    }
    const double tail5 = std::erfc(5.0 / std::sqrt(2.0));
    if (!(std::abs(tail5 / 5.733e-7 - 1.0) < 1e-3)) pass = false;
    if (!(std::abs(gaussian_region_radius_dim(1, tail5) - 5.0) < 1e-6)) pass = false;
    report(9, "2D radius closed form to 1e-10; 1D 5 sigma <-> delta 5.733e-7", pass);
}

// ----- criterion 10: determinism across runs and thread counts -----

void criterion_10() {
    const std::string gauss =
        "[experiment]\nkind = gaussian_audit\nseed = 77\nn_test = 20000\n"
        "[gaussian_audit]\nn_train = 2000\n";
    const std::string quant =
        "[experiment]\nkind = quantile_audit\nseed = 77\nn_test = 100000\n"
        "[quantile_audit]\nn_train = 20000\n";
    bool pass = true;
    int idx = 0;
    for (const auto& [kind, cfg] : {std::pair{std::string("gaussian_audit"), gauss},
                                    std::pair{std::string("quantile_audit"), quant}}) {
        const fs::path a = scratch("c10_" + std::to_string(idx) + "_a");
        const fs::path b = scratch("c10_" + std::to_string(idx) + "_b");
        const fs::path c = scratch("c10_" + std::to_string(idx) + "_c");
        run_recipe(kind, cfg, a, 1);
        run_recipe(kind, cfg, b, 1);
        run_recipe(kind, cfg, c, 8);
        if (!same_tree(a, b) || !same_tree(a, c)) pass = false;
        ++idx;
    }
    report(10, "reruns and 1-vs-8-thread runs emit byte-identical payloads", pass);
}

// ----- criterion 11: compact property suite -----

std::vector<std::size_t> wrap_hull(std::span<const Vec2> pts) {
    std::size_t start = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].x < pts[start].x || (pts[i].x == pts[start].x && pts[i].y < pts[start].y)) {
            start = i;
        }
    }
    std::vector<std::size_t> hull;
    std::size_t cur = start;
    do {
        hull.push_back(cur);
        std::size_t next = (cur + 1) % pts.size();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (cross(pts[cur], pts[next], pts[i]) < 0.0) next = i;
        }
        cur = next;
    } while (cur != start && hull.size() <= pts.size());
    return hull;
}

void criterion_11() {
    bool pass = true;
    std::string failed;
    auto require = [&](bool ok, const char* what) {
        if (!ok) {
            pass = false;
            failed += std::string(failed.empty() ? "" : ", ") + what;
        }
    };

    // pruning monotonicity in epsilon
    {
        const Dataset train = gen_lane_trajectories(300, 0.3, 5.0, CounterRng(90, 1));
        Dataset test = gen_lane_trajectories(50, 0.3, 5.0, CounterRng(90, 2));
        test.role = DatasetRole::test;
        std::size_t last = 0;
        bool mono = true;
        for (double eps : {0.2, 0.6096, 2.0}) {
            PruningConfig pc;
            pc.epsilon_traj = eps;
            pc.epsilon_env = 4.0 * eps;
            const std::size_t kept = prune_training_set(test, train, pc).scenarios.size();
            if (kept < last) mono = false;
            last = kept;
        }
        require(mono, "pruning monotonicity");
    }
    // EM log-likelihood monotone along the winning trace
    {
        std::vector<Vec2> pts = gen_gaussian_2d(250, {-3.0, 0.0}, {}, CounterRng(91, 1));
        const std::vector<Vec2> more = gen_gaussian_2d(250, {3.0, 0.0}, {}, CounterRng(91, 2));
        pts.insert(pts.end(), more.begin(), more.end());
        const GmmModel gmm = fit_gmm(pts, 2, EmConfig{}, CounterRng(91, 3));
        const auto& trace = gmm.diagnostics().log_likelihood_trace;
        bool mono = trace.size() >= 2;
        for (std::size_t i = 1; i < trace.size(); ++i) {
            if (trace[i] < trace[i - 1] - 1e-7 * (1.0 + std::abs(trace[i - 1]))) mono = false;
        }
        require(mono, "EM monotonicity");
    }
    // tube nesting and the hull superset
    {
        ActionSet as;
        as.n = 400;
        as.timesteps = 2;
        as.pts.resize(800);
        const CounterRng rng(92, 1);
        for (std::size_t i = 0; i < as.pts.size(); ++i) {
            as.pts[i] = {rng.normal(2 * i), rng.normal(2 * i + 1)};
        }
        const GreedyPeel peel(as, 100);
        const QuantileTube wide = peel.tube_at(0.01);
        const QuantileTube narrow = peel.tube_at(0.2);
        const ScenarioHull hull = fit_scenario_hull(as);
        bool nested = true;
        for (std::size_t t = 0; t < as.timesteps; ++t) {
            for (const Vec2 v : narrow.sections()[t].polygon) {
                if (!wide.sections()[t].contains(v)) nested = false;
            }
            for (const Vec2 v : wide.sections()[t].polygon) {
                if (!hull.sections[t].contains(v)) nested = false;
            }
        }
        require(nested, "tube nesting");
    }
    // hull equals the gift-wrapping oracle
    {
        const CounterRng rng(93, 1);
        std::vector<Vec2> pts(500);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            pts[i] = {rng.normal(2 * i), rng.normal(2 * i + 1)};
        }
        std::vector<std::size_t> got = convex_hull_indices(pts);
        std::vector<std::size_t> want = wrap_hull(pts);
        bool same = got.size() == want.size();
        if (same) {
            const auto rot = std::find(want.begin(), want.end(), got[0]);
            same = rot != want.end();
            if (same) {
                std::rotate(want.begin(), rot, want.end());
                same = got == want;
            }
        }
        require(same, "hull oracle equality");
    }
    // binomial calibration of the true-parameter model
    {
        FittedModel m;
        m.cls = ModelClass::gaussian;
        m.gaussian = GaussianModel(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
        const std::vector<Vec2> test =
            gen_gaussian_2d(1'000'000, {0.0, 0.0}, {}, CounterRng(94, 1));
        const CalibrationCurve c =
            calibration_curve(m, ActionSet::from_points(test), DeltaGrid::default_grid(), 8);
        bool ok = true;
        for (const CurvePoint& p : c.points) {
            if (p.delta < 1e-4 * (1.0 - 1e-9)) continue;
            const double sd = std::sqrt(p.expected_count * (1.0 - p.delta));
            if (std::abs(static_cast<double>(p.observed_count) - p.expected_count) > 4.5 * sd) {
                ok = false;
            }
        }
        require(ok, "binomial calibration");
        // CSV round trip on the same curve
        const std::string once = curve_to_csv(c);
        require(curve_to_csv(curve_from_csv(once)) == once, "curve CSV round trip");
        const std::vector<std::pair<double, double>> sp{{1e3, 0.031}, {1e4, 0.0051}, {1e5, 9e-4}};
        require(scaling_from_csv(scaling_to_csv(sp)) == sp, "scaling CSV round trip");
    }
    report(11, "module property suites (pruning, EM, nesting, hull, binomial, CSV)", pass, failed);
}

}  // namespace

int main() {
    criteria_1_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    std::printf("%d of 11 criteria failed\n", g_failures);
    return g_failures;
}
