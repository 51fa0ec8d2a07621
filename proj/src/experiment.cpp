#include "tailcal/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "tailcal/calibration.hpp"
#include "tailcal/csv.hpp"
#include "tailcal/error.hpp"
#include "tailcal/gaussian.hpp"
#include "tailcal/generators.hpp"
#include "tailcal/gmm.hpp"
#include "tailcal/ingest.hpp"
#include "tailcal/model.hpp"
#include "tailcal/tube.hpp"
#include "tailcal/two_mode.hpp"

namespace tailcal {

using nlohmann::json;

static constexpr const char* kVersion = "0.1.0";

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string_view experiment_kind_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::gaussian_audit: return "gaussian_audit";
        case ExperimentKind::gmm_audit: return "gmm_audit";
        case ExperimentKind::quantile_audit: return "quantile_audit";
        case ExperimentKind::quantile_scaling: return "quantile_scaling";
        case ExperimentKind::scenario_opt: return "scenario_opt";
        case ExperimentKind::hmm_intervals: return "hmm_intervals";
        case ExperimentKind::ingest_audit: return "ingest_audit";
    }
    throw Error(ErrorKind::config, "bad experiment kind");
}

ExperimentKind experiment_kind_from_name(std::string_view name) {
    for (ExperimentKind k :
         {ExperimentKind::gaussian_audit, ExperimentKind::gmm_audit, ExperimentKind::quantile_audit,
          ExperimentKind::quantile_scaling, ExperimentKind::scenario_opt,
          ExperimentKind::hmm_intervals, ExperimentKind::ingest_audit}) {
        if (experiment_kind_name(k) == name) return k;
    }
    throw Error(ErrorKind::config, "unknown experiment kind: " + std::string(name));
}

ExperimentConfig load_experiment_config(const std::string& path) {
    ExperimentConfig cfg;
    cfg.raw = Config::parse_file(path);
    cfg.kind = experiment_kind_from_name(cfg.raw.get_string("experiment.kind"));
    cfg.rng.seed = cfg.raw.get_u64("experiment.seed", 12345);
    cfg.rng.stream_id = cfg.raw.get_u64("experiment.stream_id", 1);
    return cfg;
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

// Writes report files and collects their content hashes for the manifest.
class Reporter {
  public:
    Reporter(const ExperimentConfig& cfg) : cfg_(&cfg) {
        std::filesystem::create_directories(cfg.out_dir);
    }

    void emit(const std::string& name, const std::string& content) {
        write_file(cfg_->out_dir + "/" + name, content);
        files_[name] = hex64(fnv1a64(content));
    }

    void finish() {
        std::string canon;
        for (const auto& [k, v] : cfg_->raw.values()) canon += k + "=" + v + "\n";
        json manifest;
        manifest["experiment"] = experiment_kind_name(cfg_->kind);
        manifest["config_hash"] = hex64(fnv1a64(canon));
        manifest["seed"] = cfg_->rng.seed;
        manifest["stream_id"] = cfg_->rng.stream_id;
        manifest["quick"] = cfg_->quick;
        manifest["version"] = kVersion;
        manifest["files"] = files_;
        write_file(cfg_->out_dir + "/manifest.json", dump_json(manifest));
    }

  private:
    const ExperimentConfig* cfg_;
    json files_ = json::object();
};

DeltaGrid grid_from_config(const Config& cfg) {
    if (!cfg.has("experiment.grid")) return DeltaGrid::default_grid();
    DeltaGrid g;
    g.deltas = cfg.get_list("experiment.grid");
    g.validate();
    return g;
}

std::size_t test_size(const ExperimentConfig& cfg) {
    const double fallback = cfg.quick ? 1e5 : 1e7;
    return static_cast<std::size_t>(cfg.raw.get_double("experiment.n_test", fallback));
}

json curve_summary(const CalibrationCurve& curve, double eta) {
    const DeltaMinResult dm = delta_min(curve, eta);
    json j;
    j["n_test"] = curve.n_test;
    j["eta"] = eta;
    if (dm.delta_min) {
        j["delta_min"] = *dm.delta_min;
    } else {
        j["delta_min"] = nullptr;
    }
    return j;
}

FittedModel gaussian_point_model(std::span<const Vec2> train, ModelClass cls, RngSpec prov) {
    FittedModel m;
    m.cls = cls;
    m.gaussian = cls == ModelClass::noisy_rational ? fit_noisy_rational(train) : fit_gaussian(train);
    m.meta.rng = prov;
    m.meta.n_train = train.size();
    if (cls == ModelClass::noisy_rational) {
        m.meta.note = "rationality temperature absorbed into the covariance scale";
    }
    return m;
}

void run_gaussian_audit(const ExperimentConfig& cfg, Reporter& rep) {
    const DeltaGrid grid = grid_from_config(cfg.raw);
    const std::size_t n_train =
        static_cast<std::size_t>(cfg.raw.get_double("gaussian_audit.n_train", 1e4));
    const std::size_t n_test = test_size(cfg);
    const double eta = cfg.raw.get_double("experiment.eta", 0.5);
    const CounterRng base(cfg.rng);

    struct Gen {
        const char* name;
        NoiseKind kind;
        double frac;
        const char* annotation;
    };
    // The uniform recipe widens the noise so the noisy sample's range matches
    // the 30%-of-range reading; see README.
    const Gen gens[3] = {
        {"gaussian", NoiseKind::none, 0.0, "paper predicts well calibrated at all delta"},
        {"uniform", NoiseKind::uniform,
         cfg.raw.get_double("gaussian_audit.uniform_noise_frac", 0.75),
         "paper predicts conservative (ratio below 1) at low delta"},
        {"symmetric", NoiseKind::symmetric_nonuniform,
         cfg.raw.get_double("gaussian_audit.symmetric_noise_frac", 0.3),
         "paper predicts dangerous (ratio above 1) at low delta"},
    };
    json summary;
    summary["recipe"] = "gaussian_audit";
    summary["n_train"] = n_train;
    summary["base_distribution"] = "standard normal (paper leaves it unstated)";
    for (int i = 0; i < 3; ++i) {
        const NoiseSpec noise{gens[i].kind, gens[i].frac};
        const Cov2 cov;
        const std::vector<Vec2> train =
            gen_noisy_gaussian_2d(n_train, cov, noise, base.substream(100 + 2 * i));
        const std::vector<Vec2> test =
            gen_noisy_gaussian_2d(n_test, cov, noise, base.substream(101 + 2 * i));
        const FittedModel model = gaussian_point_model(train, ModelClass::gaussian, cfg.rng);
        const CalibrationCurve curve =
            calibration_curve(model, ActionSet::from_points(test), grid, cfg.threads);
        rep.emit(std::string("curve_") + gens[i].name + ".csv", curve_to_csv(curve));
        json gj = curve_summary(curve, eta);
        gj["noise_frac"] = gens[i].frac;
        gj["annotation"] = gens[i].annotation;
        summary["generators"][gens[i].name] = gj;
    }
    rep.emit("summary.json", dump_json(summary));
}

void run_gmm_audit(const ExperimentConfig& cfg, Reporter& rep) {
    const std::size_t n_train =
        static_cast<std::size_t>(cfg.raw.get_double("gmm_audit.n_train", 1e4));
    const std::size_t n_test = test_size(cfg);
    const double eta = cfg.raw.get_double("experiment.eta", 0.5);
    const std::size_t mc = static_cast<std::size_t>(
        cfg.raw.get_double("gmm_audit.mc_samples", cfg.quick ? 1e5 : 1e6));
    const double frac = cfg.raw.get_double("gmm_audit.symmetric_noise_frac", 0.3);
    std::vector<double> ks = cfg.raw.get_list("gmm_audit.k", {2.0, 3.0, 4.0});

    // drop grid deltas the Monte-Carlo threshold cannot resolve
    DeltaGrid grid;
    for (double d : grid_from_config(cfg.raw).deltas) {
        if (d * static_cast<double>(mc) >= 10.0) grid.deltas.push_back(d);
    }
    grid.validate();

    const CounterRng base(cfg.rng);
    const NoiseSpec noise{NoiseKind::symmetric_nonuniform, frac};
    const Cov2 cov;
    const std::vector<Vec2> train = gen_noisy_gaussian_2d(n_train, cov, noise, base.substream(200));
    const std::vector<Vec2> test = gen_noisy_gaussian_2d(n_test, cov, noise, base.substream(201));
    const ActionSet test_set = ActionSet::from_points(test);

    json summary;
    summary["recipe"] = "gmm_audit";
    summary["n_train"] = n_train;
    summary["mc_samples"] = mc;
    summary["annotation"] =
        "paper predicts no improvement at low delta from added mixture components";
    for (double kd : ks) {
        const std::size_t k = static_cast<std::size_t>(kd);
        FittedModel model;
        model.cls = ModelClass::gmm;
        model.gmm = fit_gmm(train, k, EmConfig{}, base.substream(210 + k));
        model.gmm_grid = grid.deltas;
        for (double d : grid.deltas) {
            model.gmm_thresholds.push_back(
                gmm_density_threshold(model.gmm, d, mc, base.substream(220 + k)));
        }
        model.meta.rng = cfg.rng;
        model.meta.n_train = n_train;
        const CalibrationCurve curve = calibration_curve(model, test_set, grid, cfg.threads);
        const std::string name = "curve_k" + std::to_string(k) + ".csv";
        rep.emit(name, curve_to_csv(curve));
        json kj = curve_summary(curve, eta);
        kj["em_iterations"] = model.gmm.diagnostics().iterations;
        kj["em_final_log_likelihood"] = model.gmm.diagnostics().final_log_likelihood;
        summary["k" + std::to_string(k)] = kj;
    }
    rep.emit("summary.json", dump_json(summary));
}

FittedModel tube_model(std::span<const Vec2> train, const DeltaGrid& grid, RngSpec prov) {
    const ActionSet actions = ActionSet::from_points(train);
    const std::size_t max_removals =
        static_cast<std::size_t>(grid.deltas.front() * static_cast<double>(actions.n));
    const GreedyPeel peel(actions, max_removals);
    FittedModel model;
    model.cls = ModelClass::quantile_tube;
    model.tube_grid = grid.deltas;
    for (double d : grid.deltas) model.tubes.push_back(peel.tube_at(d));
    model.meta.rng = prov;
    model.meta.n_train = train.size();
    return model;
}

void run_quantile_audit(const ExperimentConfig& cfg, Reporter& rep) {
    const DeltaGrid grid = grid_from_config(cfg.raw);
    const std::size_t n_train =
        static_cast<std::size_t>(cfg.raw.get_double("quantile_audit.n_train", 1e6));
    const std::size_t n_test = test_size(cfg);
    const double eta = cfg.raw.get_double("experiment.eta", 0.5);
    const CounterRng base(cfg.rng);
    const Cov2 cov;
    const std::vector<Vec2> train = gen_gaussian_2d(n_train, {0.0, 0.0}, cov, base.substream(300));
    const std::vector<Vec2> test = gen_gaussian_2d(n_test, {0.0, 0.0}, cov, base.substream(301));
    const FittedModel model = tube_model(train, grid, cfg.rng);
    const CalibrationCurve curve =
        calibration_curve(model, ActionSet::from_points(test), grid, cfg.threads);
    rep.emit("curve.csv", curve_to_csv(curve));
    json summary;
    summary["recipe"] = "quantile_audit";
    summary["n_train"] = n_train;
    summary["curve"] = curve_summary(curve, eta);
    rep.emit("summary.json", dump_json(summary));
}

void run_quantile_scaling(const ExperimentConfig& cfg, Reporter& rep) {
    const DeltaGrid grid = grid_from_config(cfg.raw);
    const std::size_t n_test = test_size(cfg);
    const double eta = cfg.raw.get_double("experiment.eta", 0.5);
    const double target = cfg.raw.get_double("quantile_scaling.delta_target", 1e-8);
    std::vector<double> ns = cfg.raw.get_list(
        "quantile_scaling.n_train", {1e3, 3162.0, 1e4, 31623.0, 1e5, 316228.0, 1e6});
    const CounterRng base(cfg.rng);
    const Cov2 cov;
    const std::vector<Vec2> test = gen_gaussian_2d(n_test, {0.0, 0.0}, cov, base.substream(311));
    const ActionSet test_set = ActionSet::from_points(test);

    std::vector<std::pair<double, double>> points;
    json per_n = json::array();
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const std::size_t n = static_cast<std::size_t>(ns[i]);
        const std::vector<Vec2> train =
            gen_gaussian_2d(n, {0.0, 0.0}, cov, base.substream(310).substream(i));
        const FittedModel model = tube_model(train, grid, cfg.rng);
        const CalibrationCurve curve = calibration_curve(model, test_set, grid, cfg.threads);
        rep.emit("curve_n" + std::to_string(n) + ".csv", curve_to_csv(curve));
        const DeltaMinResult dm = delta_min(curve, eta);
        json nj;
        nj["n_train"] = n;
        nj["delta_min"] = dm.delta_min ? json(*dm.delta_min) : json(nullptr);
        per_n.push_back(nj);
        if (dm.delta_min) points.emplace_back(static_cast<double>(n), *dm.delta_min);
    }
    rep.emit("scaling.csv", scaling_to_csv(points));
    json summary;
    summary["recipe"] = "quantile_scaling";
    summary["eta"] = eta;
    summary["per_n"] = per_n;
    if (points.size() >= 3) {
        const ScalingFit fit = scaling_fit(points);
        summary["slope"] = fit.slope;
        summary["intercept"] = fit.intercept;
        summary["r2"] = fit.r2;
        summary["delta_target"] = target;
        summary["extrapolated_n"] = fit.extrapolate(target);
        const double vcdim = cfg.raw.get_double("quantile_scaling.vcdim", 10.0);
        summary["vc_lower_bound"] = vc_lower_bound({target, vcdim, 1.0, 1.0});
        summary["vc_note"] = "unit-constant Omega expression, order-of-magnitude comparator only";
    } else {
        summary["error"] = "fewer than 3 usable (N, delta_min) points";
    }
    rep.emit("summary.json", dump_json(summary));
}

void run_scenario_opt(const ExperimentConfig& cfg, Reporter& rep) {
    const std::size_t n = static_cast<std::size_t>(cfg.raw.get_double("scenario_opt.n_train", 1e3));
    const double beta = cfg.raw.get_double("scenario_opt.beta", 1e-6);
    const CounterRng base(cfg.rng);
    const Cov2 cov;
    const std::vector<Vec2> train = gen_gaussian_2d(n, {0.0, 0.0}, cov, base.substream(400));
    const ScenarioHull hull = fit_scenario_hull(ActionSet::from_points(train));
    const double eps = campi_violation_bound(n, hull.support_count, beta);

    // plot-ready epsilon(N) at this support count and beta
    std::string bounds = "n,epsilon\n";
    for (double e = 2.0; e <= 6.0 + 1e-9; e += 0.5) {
        const std::size_t nn = static_cast<std::size_t>(std::llround(std::pow(10.0, e)));
        if (nn <= hull.support_count) continue;
        bounds += std::to_string(nn) + "," +
                  format_double(campi_violation_bound(nn, hull.support_count, beta)) + "\n";
    }
    rep.emit("bound_curve.csv", bounds);
    json summary;
    summary["recipe"] = "scenario_opt";
    summary["n_train"] = n;
    summary["beta"] = beta;
    summary["support_count"] = hull.support_count;
    summary["epsilon"] = eps;
    summary["annotation"] = "epsilon is the distribution-free hull violation bound at confidence 1-beta";
    rep.emit("summary.json", dump_json(summary));
}

ModeSpec mode_from_config(const Config& cfg, const std::string& prefix, double def_a, double def_b) {
    ModeSpec m;
    const std::string dist = cfg.get_string(prefix + ".dist", "gaussian");
    if (dist == "gaussian") {
        m.dist = ModeSpec::Dist::gaussian;
    } else if (dist == "uniform") {
        m.dist = ModeSpec::Dist::uniform;
    } else {
        throw Error(ErrorKind::config, "bad mode distribution: " + dist);
    }
    m.a = cfg.get_double(prefix + ".a", def_a);
    m.b = cfg.get_double(prefix + ".b", def_b);
    m.count = static_cast<std::size_t>(cfg.get_double(prefix + ".count", 1000.0));
    return m;
}

void run_hmm_intervals(const ExperimentConfig& cfg, Reporter& rep) {
    const double delta = cfg.raw.get_double("hmm_intervals.delta", 1e-8);
    const double lo = cfg.raw.get_double("hmm_intervals.range_lo", -2.5);
    const double hi = cfg.raw.get_double("hmm_intervals.range_hi", 2.5);
    const std::size_t grid =
        static_cast<std::size_t>(cfg.raw.get_double("hmm_intervals.grid", 4096.0));
    const ModeSpec m1 = mode_from_config(cfg.raw, "mode1", -1.0, 0.5);
    const ModeSpec m2 = mode_from_config(cfg.raw, "mode2", 1.0, 0.5);
    const CounterRng base(cfg.rng);
    const auto [pts1, pts2] = gen_two_mode_1d(m1, m2, base.substream(500));
    const TwoModeClassifier cls = fit_two_mode_classifier(pts1, pts2);
    const DecisionIntervals iv = decision_intervals(cls, delta, lo, hi, grid);

    std::string csv = "label,lo,hi\n";
    struct Tagged {
        const char* label;
        Interval iv;
    };
    std::vector<Tagged> all;
    for (const Interval& i : iv.mode1) all.push_back({"mode1", i});
    for (const Interval& i : iv.mode2) all.push_back({"mode2", i});
    for (const Interval& i : iv.gray) all.push_back({"gray", i});
    std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.iv.lo < b.iv.lo; });
    double gray_len = 0.0;
    for (const Interval& i : iv.gray) gray_len += i.hi - i.lo;
    for (const Tagged& t : all) {
        csv += std::string(t.label) + "," + format_double(t.iv.lo) + "," + format_double(t.iv.hi) + "\n";
    }
    rep.emit("intervals.csv", csv);
    json summary;
    summary["recipe"] = "hmm_intervals";
    summary["delta"] = delta;
    summary["classifier"] = {{"mu1", cls.mu1}, {"sigma1", cls.sigma1}, {"mu2", cls.mu2}, {"sigma2", cls.sigma2}};
    summary["gray_fraction_of_range"] = gray_len / (hi - lo);
    rep.emit("summary.json", dump_json(summary));
}

void run_ingest_audit(const ExperimentConfig& cfg, Reporter& rep) {
    const std::string path = cfg.raw.get_string("ingest.path");
    const IngestSchema schema = schema_from_config(cfg.raw);
    const IngestReport ing = ingest_scenarios(path, schema);
    const double split_time = cfg.raw.get_double("ingest.split_time", 2.0);
    const double window = cfg.raw.get_double("experiment.window", 2.0);
    const double eta = cfg.raw.get_double("experiment.eta", 0.5);

    // even records train, odd records test; model is a pooled Gaussian over
    // per-timestep deviations of replan windows from the train mean window
    std::vector<const Scenario*> train_sc, test_sc;
    for (std::size_t i = 0; i < ing.dataset.scenarios.size(); ++i) {
        (i % 2 == 0 ? train_sc : test_sc).push_back(&ing.dataset.scenarios[i]);
    }
    if (train_sc.size() < 4 || test_sc.empty()) {
        throw Error(ErrorKind::data, "too few scenarios for an ingest audit");
    }
    auto windows = [&](const std::vector<const Scenario*>& list) {
        std::vector<Trajectory> out;
        for (const Scenario* s : list) {
            out.push_back(replan_window(split_state_action(*s, split_time).action, window));
        }
        return out;
    };
    const std::vector<Trajectory> train_w = windows(train_sc);
    const std::vector<Trajectory> test_w = windows(test_sc);
    const std::size_t t_count = train_w[0].size();
    std::vector<Vec2> mean(t_count, {0.0, 0.0});
    for (const Trajectory& w : train_w) {
        for (std::size_t t = 0; t < t_count; ++t) {
            mean[t] = mean[t] + w.positions()[t];
        }
    }
    for (Vec2& m : mean) m = (1.0 / static_cast<double>(train_w.size())) * m;
    auto deviations = [&](const std::vector<Trajectory>& ws) {
        ActionSet s;
        s.n = ws.size();
        s.timesteps = t_count;
        for (const Trajectory& w : ws) {
            for (std::size_t t = 0; t < t_count; ++t) s.pts.push_back(w.positions()[t] - mean[t]);
        }
        return s;
    };
    std::vector<Vec2> train_dev;
    for (const Trajectory& w : train_w) {
        for (std::size_t t = 0; t < t_count; ++t) train_dev.push_back(w.positions()[t] - mean[t]);
    }
    const FittedModel model = gaussian_point_model(train_dev, ModelClass::gaussian, cfg.rng);
    const DeltaGrid grid = grid_from_config(cfg.raw);
    const CalibrationCurve curve = calibration_curve(model, deviations(test_w), grid, cfg.threads);
    rep.emit("curve.csv", curve_to_csv(curve));
    json summary;
    summary["recipe"] = "ingest_audit";
    summary["source"] = path;
    summary["scenarios"] = ing.dataset.scenarios.size();
    summary["malformed_rows"] = ing.malformed_lines.size();
    summary["malformed_lines"] = ing.malformed_lines;
    summary["partial_segments"] = ing.partial_segments;
    summary["n_train_scenarios"] = train_sc.size();
    summary["n_test_scenarios"] = test_sc.size();
    summary["curve"] = curve_summary(curve, eta);
    summary["annotation"] =
        "violations counted per test trajectory over its first replanning window only";
    rep.emit("summary.json", dump_json(summary));
}

}  // namespace

void run_experiment(const ExperimentConfig& cfg) {
    Reporter rep(cfg);
    switch (cfg.kind) {
        case ExperimentKind::gaussian_audit: run_gaussian_audit(cfg, rep); break;
        case ExperimentKind::gmm_audit: run_gmm_audit(cfg, rep); break;
        case ExperimentKind::quantile_audit: run_quantile_audit(cfg, rep); break;
        case ExperimentKind::quantile_scaling: run_quantile_scaling(cfg, rep); break;
        case ExperimentKind::scenario_opt: run_scenario_opt(cfg, rep); break;
        case ExperimentKind::hmm_intervals: run_hmm_intervals(cfg, rep); break;
        case ExperimentKind::ingest_audit: run_ingest_audit(cfg, rep); break;
    }
    rep.finish();
}

std::string export_tube_csv(const Dataset& data, std::optional<int> mode_label,
                            std::span<const double> levels, double split_time) {
    std::vector<Trajectory> actions;
    for (const Scenario& sc : data.scenarios) {
        if (mode_label && sc.mode_label != mode_label) continue;
        actions.push_back(split_state_action(sc, split_time).action);
    }
    if (actions.empty()) throw Error(ErrorKind::data, "no actions match the requested mode");
    const std::size_t t_count = actions[0].size();
    for (const Trajectory& a : actions) {
        if (a.size() != t_count) throw Error(ErrorKind::schema, "actions disagree on length");
    }
    std::string csv = "t,center_x,center_y,sigma_lat";
    for (double l : levels) csv += ",halfwidth_" + format_double(l);
    csv += '\n';
    const double rate = actions[0].sample_rate();
    for (std::size_t t = 0; t < t_count; ++t) {
        Vec2 mean{0.0, 0.0};
        for (const Trajectory& a : actions) mean = mean + a.positions()[t];
        mean = (1.0 / static_cast<double>(actions.size())) * mean;
        double var = 0.0;
        for (const Trajectory& a : actions) {
            const double d = a.positions()[t].y - mean.y;
            var += d * d;
        }
        var /= static_cast<double>(actions.size());
        const double sigma = std::sqrt(var);
        csv += format_double(static_cast<double>(t) / rate) + "," + format_double(mean.x) + "," +
               format_double(mean.y) + "," + format_double(sigma);
        for (double l : levels) csv += "," + format_double(l * sigma);
        csv += '\n';
    }
    return csv;
}

}  // namespace tailcal
