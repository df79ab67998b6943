#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "trc/losses.hpp"
#include "trc/model.hpp"
#include "trc/synth.hpp"

namespace trc {

/// Everything one run needs: model and data shape, objective weights,
/// optimizer settings, split sizes. A config file may set any subset; the
/// rest comes from these defaults, and the resolved whole is echoed into the
/// run manifest so no silent default ever decides an experiment.
struct RunConfig {
    ModelConfig model;
    GeneratorConfig generator;
    LossWeights loss;
    double lr = 1e-3;
    double weight_decay = 0.0;
    int batch_size = 8;
    int epochs = 200;
    int n_train = 200;
    int n_val = 20;
    int n_test = 50;
    std::uint64_t seed = 1;
};

void check_run_config(const RunConfig& cfg);

nlohmann::json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json run_config_to_json(const RunConfig& cfg);

/// Parses a config with defaults for missing fields. Unknown or ill-typed
/// fields raise ValidationError naming the offender.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

}  // namespace trc
