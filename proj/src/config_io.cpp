#include "trc/config_io.hpp"

#include <set>

#include "trc/common.hpp"
#include "trc/wire.hpp"

namespace trc {

namespace {

using json = nlohmann::json;

// Typed field extraction with an error message that names the field.
template <typename T>
void fetch(const json& j, const char* section, const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("config field ") + section + "." + key +
                              " has the wrong type");
    }
}

void reject_unknown(const json& j, const char* section, std::set<std::string> known) {
    if (!j.is_object())
        throw ValidationError(std::string("config section ") + section + " must be an object");
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw ValidationError(std::string("unknown config field ") + section + "." + key);
}

}  // namespace

nlohmann::json model_config_to_json(const ModelConfig& c) {
    return json{{"t", c.t},          {"c_in", c.c_in},       {"c", c.c},
                {"heads", c.heads},  {"l_enc", c.l_enc},     {"l_dec", c.l_dec},
                {"q", c.q},          {"window", c.window},   {"ffn_mult", c.ffn_mult},
                {"alpha", c.alpha},  {"use_daq", c.use_daq}, {"use_icl", c.use_icl}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    reject_unknown(j, "model",
                   {"t", "c_in", "c", "heads", "l_enc", "l_dec", "q", "window", "ffn_mult",
                    "alpha", "use_daq", "use_icl"});
    ModelConfig c;
    fetch(j, "model", "t", c.t);
    fetch(j, "model", "c_in", c.c_in);
    fetch(j, "model", "c", c.c);
    fetch(j, "model", "heads", c.heads);
    fetch(j, "model", "l_enc", c.l_enc);
    fetch(j, "model", "l_dec", c.l_dec);
    fetch(j, "model", "q", c.q);
    fetch(j, "model", "window", c.window);
    fetch(j, "model", "ffn_mult", c.ffn_mult);
    fetch(j, "model", "alpha", c.alpha);
    fetch(j, "model", "use_daq", c.use_daq);
    fetch(j, "model", "use_icl", c.use_icl);
    return c;
}

namespace {

json generator_to_json(const GeneratorConfig& g) {
    return json{{"t", g.t},
                {"c_in", g.c_in},
                {"count_min", g.count_min},
                {"count_max", g.count_max},
                {"period_min", g.period_min},
                {"period_max", g.period_max},
                {"motif_dim", g.motif_dim},
                {"noise_std", g.noise_std},
                {"interruption_probability", g.interruption_probability},
                {"background_drift_std", g.background_drift_std},
                {"master_seed", g.master_seed}};
}

GeneratorConfig generator_from_json(const json& j) {
    reject_unknown(j, "generator",
                   {"t", "c_in", "count_min", "count_max", "period_min", "period_max",
                    "motif_dim", "noise_std", "interruption_probability",
                    "background_drift_std", "master_seed"});
    GeneratorConfig g;
    fetch(j, "generator", "t", g.t);
    fetch(j, "generator", "c_in", g.c_in);
    fetch(j, "generator", "count_min", g.count_min);
    fetch(j, "generator", "count_max", g.count_max);
    fetch(j, "generator", "period_min", g.period_min);
    fetch(j, "generator", "period_max", g.period_max);
    fetch(j, "generator", "motif_dim", g.motif_dim);
    fetch(j, "generator", "noise_std", g.noise_std);
    fetch(j, "generator", "interruption_probability", g.interruption_probability);
    fetch(j, "generator", "background_drift_std", g.background_drift_std);
    fetch(j, "generator", "master_seed", g.master_seed);
    return g;
}

json loss_to_json(const LossWeights& w) {
    return json{{"lambda_hungarian", w.lambda_hungarian},
                {"lambda_ctrs", w.lambda_ctrs},
                {"tau", w.tau},
                {"lambda_l1", w.position.lambda_l1},
                {"lambda_giou", w.position.lambda_giou}};
}

LossWeights loss_from_json(const json& j) {
    reject_unknown(j, "loss",
                   {"lambda_hungarian", "lambda_ctrs", "tau", "lambda_l1", "lambda_giou"});
    LossWeights w;
    fetch(j, "loss", "lambda_hungarian", w.lambda_hungarian);
    fetch(j, "loss", "lambda_ctrs", w.lambda_ctrs);
    fetch(j, "loss", "tau", w.tau);
    fetch(j, "loss", "lambda_l1", w.position.lambda_l1);
    fetch(j, "loss", "lambda_giou", w.position.lambda_giou);
    return w;
}

}  // namespace

void check_run_config(const RunConfig& cfg) {
    check_model_config(cfg.model);
    check_generator_config(cfg.generator);
    check_loss_weights(cfg.loss);
    if (cfg.generator.t != cfg.model.t || cfg.generator.c_in != cfg.model.c_in)
        throw ValidationError("config: generator and model disagree on T or C_in");
    if (cfg.lr <= 0) throw ValidationError("config field optimizer.lr must be positive");
    if (cfg.weight_decay < 0)
        throw ValidationError("config field optimizer.weight_decay must be nonnegative");
    if (cfg.batch_size < 1) throw ValidationError("config field optimizer.batch_size must be >= 1");
    if (cfg.epochs < 0) throw ValidationError("config field optimizer.epochs must be >= 0");
    if (cfg.n_train < 0 || cfg.n_val < 0 || cfg.n_test < 0)
        throw ValidationError("config: split sizes must be nonnegative");
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
    return json{{"model", model_config_to_json(cfg.model)},
                {"generator", generator_to_json(cfg.generator)},
                {"loss", loss_to_json(cfg.loss)},
                {"optimizer",
                 json{{"lr", cfg.lr},
                      {"weight_decay", cfg.weight_decay},
                      {"batch_size", cfg.batch_size},
                      {"epochs", cfg.epochs}}},
                {"splits", json{{"train", cfg.n_train}, {"val", cfg.n_val}, {"test", cfg.n_test}}},
                {"seed", cfg.seed}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    reject_unknown(j, "<top>", {"model", "generator", "loss", "optimizer", "splits", "seed"});
    RunConfig cfg;
    if (j.contains("model")) cfg.model = model_config_from_json(j["model"]);
    if (j.contains("generator")) cfg.generator = generator_from_json(j["generator"]);
    if (j.contains("loss")) cfg.loss = loss_from_json(j["loss"]);
    if (j.contains("optimizer")) {
        const json& o = j["optimizer"];
        reject_unknown(o, "optimizer", {"lr", "weight_decay", "batch_size", "epochs"});
        fetch(o, "optimizer", "lr", cfg.lr);
        fetch(o, "optimizer", "weight_decay", cfg.weight_decay);
        fetch(o, "optimizer", "batch_size", cfg.batch_size);
        fetch(o, "optimizer", "epochs", cfg.epochs);
    }
    if (j.contains("splits")) {
        const json& s = j["splits"];
        reject_unknown(s, "splits", {"train", "val", "test"});
        fetch(s, "splits", "train", cfg.n_train);
        fetch(s, "splits", "val", cfg.n_val);
        fetch(s, "splits", "test", cfg.n_test);
    }
    fetch(j, "<top>", "seed", cfg.seed);
    check_run_config(cfg);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    const std::string text = wire::read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    return run_config_from_json(j);
}

}  // namespace trc
