#pragma once

#include <nlohmann/json_fwd.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tailcal/gaussian.hpp"
#include "tailcal/gmm.hpp"
#include "tailcal/rng.hpp"
#include "tailcal/tube.hpp"
#include "tailcal/two_mode.hpp"

namespace tailcal {

enum class ModelClass {
    gaussian,
    noisy_rational,
    gmm,
    quantile_tube,
    scenario_hull,
    two_mode,
};

std::string_view model_class_name(ModelClass cls);
ModelClass model_class_from_name(std::string_view name);

struct ModelMeta {
    RngSpec rng{};
    std::size_t n_train = 0;
    std::string note;
};

// Tagged union over the fitted model classes. Only the members matching
// `cls` are meaningful. gmm/tube models carry their per-delta caches:
// gmm_grid aligns with gmm_thresholds, tube_grid with tubes (both strictly
// decreasing in delta; tubes nested).
struct FittedModel {
    ModelClass cls = ModelClass::gaussian;

    GaussianModel gaussian;
    GmmModel gmm;
    std::vector<double> gmm_grid;
    std::vector<double> gmm_thresholds;
    std::vector<double> tube_grid;
    std::vector<QuantileTube> tubes;
    ScenarioHull hull;
    TwoModeClassifier classifier;

    ModelMeta meta;

    // Membership of a windowed action (one point per timestep) in the
    // (1 - delta) region; boundaries count as inside. Throws
    // ErrorKind::unsupported for two_mode and ErrorKind::resolution when a
    // gmm/tube cache has no entry for delta.
    bool contains(std::span<const Vec2> window, double delta) const;

    // Index into gmm_grid / tube_grid matching delta to 1e-12 relative.
    std::size_t cached_index(double delta) const;
};

nlohmann::json model_to_json(const FittedModel& model);
FittedModel model_from_json(const nlohmann::json& j);

}  // namespace tailcal
