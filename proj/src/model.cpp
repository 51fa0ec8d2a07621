#include "tailcal/model.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "tailcal/error.hpp"

namespace tailcal {

using nlohmann::json;

std::string_view model_class_name(ModelClass cls) {
    switch (cls) {
        case ModelClass::gaussian: return "gaussian";
        case ModelClass::noisy_rational: return "noisy_rational";
        case ModelClass::gmm: return "gmm";
        case ModelClass::quantile_tube: return "quantile_tube";
        case ModelClass::scenario_hull: return "scenario_hull";
        case ModelClass::two_mode: return "two_mode";
    }
    throw Error(ErrorKind::range, "bad model class");
}

ModelClass model_class_from_name(std::string_view name) {
    for (ModelClass c : {ModelClass::gaussian, ModelClass::noisy_rational, ModelClass::gmm,
                         ModelClass::quantile_tube, ModelClass::scenario_hull,
                         ModelClass::two_mode}) {
        if (model_class_name(c) == name) return c;
    }
    throw Error(ErrorKind::schema, "unknown model class: " + std::string(name));
}

namespace {

std::size_t grid_lookup(const std::vector<double>& grid, double delta) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (std::abs(grid[i] - delta) <= 1e-12 * delta) return i;
    }
    throw Error(ErrorKind::resolution, "no cached region for the requested delta");
}

}  // namespace

std::size_t FittedModel::cached_index(double delta) const {
    switch (cls) {
        case ModelClass::gmm: return grid_lookup(gmm_grid, delta);
        case ModelClass::quantile_tube: return grid_lookup(tube_grid, delta);
        default: throw Error(ErrorKind::unsupported, "model class has no delta cache");
    }
}

bool FittedModel::contains(std::span<const Vec2> window, double delta) const {
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::range, "delta must lie in (0, 1)");
    switch (cls) {
        case ModelClass::gaussian:
        case ModelClass::noisy_rational: {
            const double r = gaussian_region_radius(gaussian, delta);
            const double r2 = r * r;
            for (const Vec2& p : window) {
                if (gaussian.mahalanobis2(p) > r2) return false;
            }
            return true;
        }
        case ModelClass::gmm: {
            const double t = gmm_thresholds[cached_index(delta)];
            for (const Vec2& p : window) {
                if (gmm.density(p) < t) return false;
            }
            return true;
        }
        case ModelClass::quantile_tube:
            return tubes[cached_index(delta)].contains(window);
        case ModelClass::scenario_hull:
            return hull.contains(window);
        case ModelClass::two_mode:
            throw Error(ErrorKind::unsupported,
                        "two_mode classifies observations; use mode_posterior");
    }
    throw Error(ErrorKind::range, "bad model class");
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json mat_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

Eigen::VectorXd vec_from_json(const json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

Eigen::MatrixXd mat_from_json(const json& a) {
    const std::size_t rows = a.size();
    const std::size_t cols = rows ? a[0].size() : 0;
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = a[r][c].get<double>();
        }
    }
    return m;
}

json gaussian_to_json(const GaussianModel& g) {
    return {{"mean", vec_to_json(g.mean())}, {"cov", mat_to_json(g.cov())}};
}

GaussianModel gaussian_from_json(const json& j) {
    return GaussianModel(vec_from_json(j.at("mean")), mat_from_json(j.at("cov")));
}

json sections_to_json(const std::vector<CrossSection>& sections) {
    json out = json::array();
    for (const CrossSection& s : sections) {
        json poly = json::array();
        for (const Vec2& p : s.polygon) poly.push_back({p.x, p.y});
        out.push_back({{"polygon", poly}, {"tol", s.tol}});
    }
    return out;
}

std::vector<CrossSection> sections_from_json(const json& j) {
    std::vector<CrossSection> out;
    for (const json& sj : j) {
        CrossSection s;
        for (const json& pj : sj.at("polygon")) s.polygon.push_back({pj[0].get<double>(), pj[1].get<double>()});
        s.tol = sj.at("tol").get<double>();
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

json model_to_json(const FittedModel& model) {
    json j;
    j["class"] = model_class_name(model.cls);
    j["meta"] = {{"seed", model.meta.rng.seed},
                 {"stream_id", model.meta.rng.stream_id},
                 {"n_train", model.meta.n_train},
                 {"note", model.meta.note}};
    switch (model.cls) {
        case ModelClass::gaussian:
        case ModelClass::noisy_rational:
            j["gaussian"] = gaussian_to_json(model.gaussian);
            break;
        case ModelClass::gmm: {
            json comps = json::array();
            for (const auto& c : model.gmm.components()) {
                comps.push_back({{"weight", c.weight}, {"gaussian", gaussian_to_json(c.gaussian)}});
            }
            const EmDiagnostics& d = model.gmm.diagnostics();
            j["gmm"] = {{"components", comps},
                        {"diagnostics",
                         {{"iterations", d.iterations},
                          {"restarts_run", d.restarts_run},
                          {"final_log_likelihood", d.final_log_likelihood}}}};
            j["grid"] = model.gmm_grid;
            j["thresholds"] = model.gmm_thresholds;
            break;
        }
        case ModelClass::quantile_tube: {
            json tubes = json::array();
            for (const QuantileTube& t : model.tubes) {
                tubes.push_back({{"target_delta", t.target_delta()},
                                 {"coverage_count", t.coverage_count()},
                                 {"sections", sections_to_json(t.sections())}});
            }
            j["grid"] = model.tube_grid;
            j["tubes"] = tubes;
            break;
        }
        case ModelClass::scenario_hull:
            j["hull"] = {{"support_count", model.hull.support_count},
                         {"sections", sections_to_json(model.hull.sections)}};
            break;
        case ModelClass::two_mode:
            j["classifier"] = {{"mu1", model.classifier.mu1},
                               {"sigma1", model.classifier.sigma1},
                               {"mu2", model.classifier.mu2},
                               {"sigma2", model.classifier.sigma2}};
            break;
    }
    return j;
}

FittedModel model_from_json(const json& j) {
    FittedModel m;
    try {
        m.cls = model_class_from_name(j.at("class").get<std::string>());
        const json& meta = j.at("meta");
        m.meta.rng.seed = meta.at("seed").get<std::uint64_t>();
        m.meta.rng.stream_id = meta.at("stream_id").get<std::uint64_t>();
        m.meta.n_train = meta.at("n_train").get<std::size_t>();
        m.meta.note = meta.at("note").get<std::string>();
        switch (m.cls) {
            case ModelClass::gaussian:
            case ModelClass::noisy_rational:
                m.gaussian = gaussian_from_json(j.at("gaussian"));
                break;
            case ModelClass::gmm: {
                std::vector<GmmModel::Component> comps;
                for (const json& cj : j.at("gmm").at("components")) {
                    comps.push_back({cj.at("weight").get<double>(),
                                     gaussian_from_json(cj.at("gaussian"))});
                }
                EmDiagnostics d;
                const json& dj = j.at("gmm").at("diagnostics");
                d.iterations = dj.at("iterations").get<int>();
                d.restarts_run = dj.at("restarts_run").get<int>();
                d.final_log_likelihood = dj.at("final_log_likelihood").get<double>();
                m.gmm = GmmModel(std::move(comps), std::move(d));
                m.gmm_grid = j.at("grid").get<std::vector<double>>();
                m.gmm_thresholds = j.at("thresholds").get<std::vector<double>>();
                break;
            }
            case ModelClass::quantile_tube:
                m.tube_grid = j.at("grid").get<std::vector<double>>();
                for (const json& tj : j.at("tubes")) {
                    m.tubes.emplace_back(sections_from_json(tj.at("sections")),
                                         tj.at("target_delta").get<double>(),
                                         tj.at("coverage_count").get<std::size_t>());
                }
                break;
            case ModelClass::scenario_hull:
                m.hull.support_count = j.at("hull").at("support_count").get<std::size_t>();
                m.hull.sections = sections_from_json(j.at("hull").at("sections"));
                break;
            case ModelClass::two_mode:
                m.classifier.mu1 = j.at("classifier").at("mu1").get<double>();
                m.classifier.sigma1 = j.at("classifier").at("sigma1").get<double>();
                m.classifier.mu2 = j.at("classifier").at("mu2").get<double>();
                m.classifier.sigma2 = j.at("classifier").at("sigma2").get<double>();
                break;
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::schema, std::string("bad model document: ") + e.what());
    }
    return m;
}

}  // namespace tailcal
