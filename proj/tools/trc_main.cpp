#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "trc/checkpoint.hpp"
#include "trc/common.hpp"
#include "trc/config_io.hpp"
#include "trc/metrics.hpp"
#include "trc/synth.hpp"
#include "trc/train.hpp"
#include "trc/wire.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "run";
    std::int64_t seed_override = -1;
};

trc::RunConfig resolve_config(const CommonArgs& args, bool seed_is_generator) {
    trc::RunConfig cfg =
        args.config_path.empty() ? trc::RunConfig{} : trc::load_run_config(args.config_path);
    if (args.seed_override >= 0) {
        if (seed_is_generator)
            cfg.generator.master_seed = static_cast<std::uint64_t>(args.seed_override);
        else
            cfg.seed = static_cast<std::uint64_t>(args.seed_override);
    }
    trc::check_run_config(cfg);
    return cfg;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw trc::IoError("cannot create directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
    trc::wire::write_file(path, text);
}

std::string metrics_csv(const trc::MetricReport& rep) {
    std::string csv = "split,metric,value,M\n";
    auto row = [&](const std::string& split, const char* metric, double v, int m) {
        csv += split + "," + metric + "," + trc::format_fixed(v, 6) + "," + std::to_string(m) +
               "\n";
    };
    row("overall", "mae", rep.mae, rep.m);
    row("overall", "obo", rep.obo, rep.m);
    const std::pair<const char*, const std::optional<trc::ClassMetrics>*> splits[] = {
        {"short", &rep.short_period}, {"medium", &rep.medium_period}, {"long", &rep.long_period}};
    for (const auto& [name, cls] : splits) {
        if (!cls->has_value()) continue;
        row(name, "mae", (*cls)->mae, (*cls)->m);
        row(name, "obo", (*cls)->obo, (*cls)->m);
    }
    return csv;
}

int cmd_generate(const CommonArgs& args) {
    trc::RunConfig cfg = resolve_config(args, /*seed_is_generator=*/true);
    ensure_dir(args.out_dir);
    trc::SplitSet splits =
        trc::generate_split(cfg.generator, cfg.n_train, cfg.n_val, cfg.n_test);
    trc::write_dataset(splits.train, args.out_dir + "/train.trc");
    trc::write_dataset(splits.val, args.out_dir + "/val.trc");
    trc::write_dataset(splits.test, args.out_dir + "/test.trc");

    nlohmann::json manifest;
    manifest["config"] = trc::run_config_to_json(cfg);
    manifest["files"] = {{"train", {{"path", "train.trc"}, {"count", splits.train.size()}}},
                         {"val", {{"path", "val.trc"}, {"count", splits.val.size()}}},
                         {"test", {{"path", "test.trc"}, {"count", splits.test.size()}}}};
    write_text(args.out_dir + "/manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << splits.train.size() << "/" << splits.val.size() << "/"
              << splits.test.size() << " sequences to " << args.out_dir << "\n";
    return 0;
}

void check_widths(const trc::ModelConfig& model, const std::vector<trc::SequenceSample>& data,
                  const char* what) {
    for (const trc::SequenceSample& s : data) {
        if (s.features.cols() != model.c_in)
            throw trc::ValidationError(std::string(what) +
                                       ": dataset feature width does not match the model");
        if (s.true_count() > model.q)
            throw trc::ValidationError(std::string(what) +
                                       ": a sequence has more cycles than the model has queries");
    }
}

int cmd_train(const CommonArgs& args) {
    trc::RunConfig cfg = resolve_config(args, /*seed_is_generator=*/false);
    std::vector<trc::SequenceSample> train_set =
        trc::read_dataset(args.out_dir + "/train.trc");
    std::vector<trc::SequenceSample> val_set;
    if (fs::exists(args.out_dir + "/val.trc"))
        val_set = trc::read_dataset(args.out_dir + "/val.trc");
    check_widths(cfg.model, train_set, "train");
    check_widths(cfg.model, val_set, "train");

    trc::TrainResult result = trc::train_model(cfg, train_set, val_set);

    std::string log = "epoch,loss,hungarian,contrastive,val_obo,val_mae\n";
    for (const trc::EpochLog& e : result.log)
        log += std::to_string(e.epoch) + "," + trc::format_fixed(e.loss, 6) + "," +
               trc::format_fixed(e.hungarian, 6) + "," + trc::format_fixed(e.contrastive, 6) +
               "," + trc::format_fixed(e.val_obo, 6) + "," + trc::format_fixed(e.val_mae, 6) +
               "\n";
    write_text(args.out_dir + "/train_log.csv", log);
    write_text(args.out_dir + "/run.json", trc::run_config_to_json(cfg).dump(2) + "\n");
    trc::save_checkpoint(result.model, result.best_epoch, args.out_dir + "/checkpoint.trck");

    if (result.best_epoch >= 0)
        std::cout << "best epoch " << result.best_epoch << ": val obo "
                  << trc::format_fixed(result.best_obo, 4) << ", val mae "
                  << trc::format_fixed(result.best_mae, 4) << "\n";
    else
        std::cout << "saved initialized model (no epochs ran)\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data, double alpha,
             const std::string& out_path, bool predicted_denominator) {
    trc::LoadedCheckpoint ck = trc::load_checkpoint(checkpoint);
    std::vector<trc::SequenceSample> set = trc::read_dataset(data);
    check_widths(ck.model.config(), set, "eval");
    const double a = alpha > 0 ? alpha : ck.model.config().alpha;
    const trc::MaeDenominator denom = predicted_denominator ? trc::MaeDenominator::kPredicted
                                                            : trc::MaeDenominator::kGroundTruth;
    trc::MetricReport rep = trc::evaluate_model(ck.model, set, a, denom);
    const std::string csv = metrics_csv(rep);
    if (!out_path.empty()) write_text(out_path, csv);
    std::cout << csv;
    return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& data,
                const std::string& out_path) {
    trc::LoadedCheckpoint ck = trc::load_checkpoint(checkpoint);
    std::vector<trc::SequenceSample> set = trc::read_dataset(data);
    check_widths(ck.model.config(), set, "predict");

    std::string csv = "seq,kind,index,prob,midpoint,duration\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
        trc::PredictionSet preds = ck.model.forward(set[i].features).final;
        for (int q = 0; q < preds.size(); ++q)
            csv += std::to_string(i) + ",query," + std::to_string(q) + "," +
                   trc::format_fixed(preds.prob(q), 6) + "," +
                   trc::format_fixed(preds.interval(q).m, 6) + "," +
                   trc::format_fixed(preds.interval(q).d, 6) + "\n";
        for (std::size_t k = 0; k < set[i].cycles.size(); ++k)
            csv += std::to_string(i) + ",cycle," + std::to_string(k) + ",," +
                   trc::format_fixed(set[i].cycles[k].m, 6) + "," +
                   trc::format_fixed(set[i].cycles[k].d, 6) + "\n";
    }
    if (!out_path.empty()) write_text(out_path, csv);
    std::cout << csv;
    return 0;
}

int cmd_benchmark(const CommonArgs& args, const std::vector<int>& lengths,
                  const std::string& out_path) {
    trc::RunConfig cfg = resolve_config(args, /*seed_is_generator=*/false);
    if (lengths.empty()) throw trc::ValidationError("benchmark: no sequence lengths given");
    for (int t : lengths)
        if (t < 1) throw trc::ValidationError("benchmark: lengths must be positive");

    trc::QueryModel model(cfg.model, cfg.seed);
    std::string csv = "T,model_macs,baseline_macs\n";
    for (int t : lengths) {
        trc::ComplexityRecord rec = trc::complexity_record(cfg.model, t);
        csv += std::to_string(rec.t) + "," + std::to_string(rec.model_macs) + "," +
               std::to_string(rec.baseline_macs) + "\n";

        // Wall-clock is informational only and deliberately kept out of the CSV.
        trc::Rng rng(7);
        std::vector<double> v(static_cast<std::size_t>(t) * cfg.model.c_in);
        for (double& x : v) x = rng.normal();
        trc::Tensor features = trc::Tensor::from({t, cfg.model.c_in}, std::move(v));
        const auto begin = std::chrono::steady_clock::now();
        model.forward(features);
        const double ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - begin)
                              .count();
        std::cout << "# T=" << t << " forward " << trc::format_fixed(ms, 2) << " ms\n";
    }
    if (!out_path.empty()) write_text(out_path, csv);
    std::cout << csv;
    return 0;
}

int cmd_sweep(const std::string& checkpoint, const std::string& data,
              const std::vector<double>& alphas, const std::string& out_path) {
    if (alphas.empty()) throw trc::ValidationError("sweep: no alpha values given");
    trc::LoadedCheckpoint ck = trc::load_checkpoint(checkpoint);
    std::vector<trc::SequenceSample> set = trc::read_dataset(data);
    check_widths(ck.model.config(), set, "sweep");

    // One forward pass per sequence; every threshold reuses the cached probs.
    std::vector<std::vector<double>> probs;
    std::vector<int> expected;
    for (const trc::SequenceSample& s : set) {
        probs.push_back(trc::sequence_probs(ck.model, s));
        expected.push_back(s.true_count());
    }
    std::string csv = "alpha,mae,obo\n";
    for (const trc::SweepRow& row : trc::threshold_sweep(probs, expected, alphas))
        csv += trc::format_fixed(row.alpha, 6) + "," + trc::format_fixed(row.mae, 6) + "," +
               trc::format_fixed(row.obo, 6) + "\n";
    if (!out_path.empty()) write_text(out_path, csv);
    std::cout << csv;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"query-based temporal repetition counter"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string checkpoint, data, out_path;
    double alpha = -1.0;
    bool predicted_denominator = false;
    std::vector<int> lengths = {64, 128, 256, 512};
    std::vector<double> alphas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

    auto add_common = [&](CLI::App* cmd, bool with_out_dir) {
        cmd->add_option("--config", common.config_path, "JSON run config (defaults when omitted)");
        cmd->add_option("--seed", common.seed_override, "override the config seed");
        if (with_out_dir) cmd->add_option("--out", common.out_dir, "run directory");
    };

    CLI::App* generate = app.add_subcommand("generate", "write train/val/test datasets");
    add_common(generate, true);

    CLI::App* train = app.add_subcommand("train", "train on a generated run directory");
    add_common(train, true);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    eval->add_option("--data", data, "dataset file")->required();
    eval->add_option("--alpha", alpha, "confidence threshold (checkpoint default when omitted)");
    eval->add_option("--out", out_path, "also write the CSV here");
    eval->add_flag("--mae-by-predicted", predicted_denominator,
                   "normalize mae by the predicted count instead of ground truth");

    CLI::App* predict = app.add_subcommand("predict", "dump per-query predictions and GT cycles");
    predict->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    predict->add_option("--data", data, "dataset file")->required();
    predict->add_option("--out", out_path, "also write the CSV here");

    CLI::App* benchmark = app.add_subcommand("benchmark", "analytic cost across sequence lengths");
    add_common(benchmark, false);
    benchmark->add_option("--lengths", lengths, "sequence lengths")->delimiter(',');
    benchmark->add_option("--out", out_path, "also write the CSV here");

    CLI::App* sweep = app.add_subcommand("sweep", "metrics across confidence thresholds");
    sweep->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    sweep->add_option("--data", data, "dataset file")->required();
    sweep->add_option("--alphas", alphas, "threshold values")->delimiter(',');
    sweep->add_option("--out", out_path, "also write the CSV here");

    try {
        app.parse(argc, argv);
        if (generate->parsed()) return cmd_generate(common);
        if (train->parsed()) return cmd_train(common);
        if (eval->parsed()) return cmd_eval(checkpoint, data, alpha, out_path,
                                            predicted_denominator);
        if (predict->parsed()) return cmd_predict(checkpoint, data, out_path);
        if (benchmark->parsed()) return cmd_benchmark(common, lengths, out_path);
        if (sweep->parsed()) return cmd_sweep(checkpoint, data, alphas, out_path);
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const trc::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const trc::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const trc::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
