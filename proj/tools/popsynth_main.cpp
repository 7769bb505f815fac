// Command-line front end: surrogate generation, model training, synthesis,
// evaluation, bootstrap confidence intervals, and the full robustness sweep.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "popsynth/popsynth.hpp"

namespace {

using namespace popsynth;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

struct TrainFlags {
    int epochs = -1;
    int batch_size = -1;
    double lr = -1.0;
    std::int64_t noise_dim = -1;
    std::int64_t latent_dim = -1;
    double kl_weight = -1.0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--epochs", epochs, "Training epochs");
        cmd->add_option("--batch-size", batch_size, "Minibatch size");
        cmd->add_option("--lr", lr, "Learning rate (applied to all optimizers)");
        cmd->add_option("--noise-dim", noise_dim, "GAN noise dimension");
        cmd->add_option("--latent-dim", latent_dim, "VAE latent dimension");
        cmd->add_option("--kl-weight", kl_weight, "VAE KL weight");
    }

    TrainConfig apply(TrainConfig config) const {
        if (epochs >= 0) config.epochs = epochs;
        if (batch_size > 0) config.batch_size = batch_size;
        if (lr > 0) {
            config.lr_generator = lr;
            config.lr_discriminator = lr;
            config.lr_vae = lr;
        }
        if (noise_dim > 0) config.noise_dim = static_cast<std::size_t>(noise_dim);
        if (latent_dim > 0) config.latent_dim = static_cast<std::size_t>(latent_dim);
        if (kl_weight >= 0) config.kl_weight = kl_weight;
        return config;
    }
};

SurrogateProfile resolve_profile(const std::string& path) {
    return path.empty() ? default_surrogate_profile() : load_profile(path);
}

int run_gen_surrogate(std::size_t rows, std::uint64_t seed, const std::string& out,
                      const std::string& profile_path, const std::string& schema_out,
                      const std::string& profile_out) {
    const SurrogateProfile profile = resolve_profile(profile_path);
    const SurveyTable table = generate_surrogate(rows, seed, profile);
    save_csv(table, out);
    if (!schema_out.empty()) save_schema(table.schema(), schema_out);
    if (!profile_out.empty()) save_profile(profile, profile_out);
    std::cout << "wrote " << table.row_count() << " rows to " << out << "\n";
    return kExitOk;
}

int run_train(const std::string& model_name, const std::string& data_path,
              const std::string& schema_path, const std::string& out, std::uint64_t seed,
              const TrainFlags& flags) {
    const ModelKind kind = model_kind_from_name(model_name);
    const SurveySchema schema = load_schema(schema_path);
    const SurveyTable table = load_csv(data_path, schema);
    require(!table.empty(), ErrorCode::EmptyData, "training data is empty");
    const BlockLayout layout = build_layout(schema);
    const EncodedMatrix encoded = encode(table, layout);

    TrainConfig config = flags.apply(TrainConfig{});
    config.seed = derive_seed(seed, fnv1a64("train"));

    TrainLog log;
    if (kind == ModelKind::gan) {
        GanModel model = gan_init(layout, config, derive_seed(seed, fnv1a64("init")));
        log = gan_train(model, encoded, config);
        save_checkpoint(model, config, out);
    } else {
        VaeModel model = vae_init(layout, config, derive_seed(seed, fnv1a64("init")));
        log = vae_train(model, encoded, config);
        save_checkpoint(model, config, out);
    }
    if (!log.epochs.empty()) {
        const auto& last = log.epochs.back();
        std::cerr << "epoch " << last.epoch << ": losses " << last.primary_loss << " / "
                  << last.secondary_loss << " (" << last.wall_ms << " ms)\n";
    }
    std::cout << "wrote checkpoint " << out << "\n";
    return kExitOk;
}

int run_synthesize(const std::string& model_path, std::size_t count, std::uint64_t seed,
                   const std::string& out) {
    const LoadedModel model = load_checkpoint(model_path);
    const SurveyTable table = model.synthesize_rows(count, seed);
    save_csv(table, out);
    std::cout << "wrote " << table.row_count() << " rows to " << out << "\n";
    return kExitOk;
}

int run_evaluate(const std::string& data_path, const std::string& ref_path,
                 const std::string& schema_path, std::size_t bins, const std::string& mode) {
    const SurveySchema schema = load_schema(schema_path);
    const SurveyTable data = load_csv(data_path, schema);
    const SurveyTable ref = load_csv(ref_path, schema);
    const EvalMode eval_mode = mode == "joint" ? EvalMode::joint : EvalMode::marginal;
    const ErrorTriple t = error_triple(eval_vector(data, bins, eval_mode, data_path),
                                       eval_vector(ref, bins, eval_mode, ref_path));
    std::cout << "mae," << format_number(t.mae) << "\n";
    std::cout << "mse," << format_number(t.mse) << "\n";
    std::cout << "rmse," << format_number(t.rmse) << "\n";
    return kExitOk;
}

int run_bootstrap(const std::string& data_path, const std::string& schema_path,
                  const std::string& model_name, double fraction, int rounds,
                  std::uint64_t seed, double test_fraction, double level,
                  const std::string& out_csv, const TrainFlags& flags) {
    const ModelKind kind = model_kind_from_name(model_name);
    const SurveySchema schema = load_schema(schema_path);
    const SurveyTable table = load_csv(data_path, schema);
    const TrainConfig config = flags.apply(TrainConfig{});

    const auto errors =
        bootstrap_errors(table, kind, fraction, rounds, config, seed, test_fraction);

    std::string text = "round,mae,mse,rmse\n";
    std::vector<double> mae_values;
    std::vector<double> mse_values;
    std::vector<double> rmse_values;
    for (std::size_t j = 0; j < errors.size(); ++j) {
        text += std::to_string(j) + "," + format_number(errors[j].mae) + "," +
                format_number(errors[j].mse) + "," + format_number(errors[j].rmse) + "\n";
        mae_values.push_back(errors[j].mae);
        mse_values.push_back(errors[j].mse);
        rmse_values.push_back(errors[j].rmse);
    }
    std::cout << text;
    if (errors.size() >= 2) {
        const auto print_ci = [&](const char* name, const std::vector<double>& values) {
            const ConfidenceInterval ci = percentile_ci(values, level);
            std::cout << name << " mean " << format_fixed4(ci.mean) << ", "
                      << format_number(level * 100.0) << "% CI [" << format_fixed4(ci.lower)
                      << ", " << format_fixed4(ci.upper) << "]\n";
        };
        print_ci("MAE", mae_values);
        print_ci("MSE", mse_values);
        print_ci("RMSE", rmse_values);
    }
    if (!out_csv.empty()) {
        std::ofstream out(out_csv);
        require(out.good(), ErrorCode::IoFailure, "cannot write " + out_csv);
        out << text;
    }
    return kExitOk;
}

int run_sweep(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
              int threads, int rounds, const std::string& fractions_csv,
              const std::string& models_csv, double level, const std::string& ci_mode,
              const std::string& format_name) {
    std::ifstream in(config_path);
    require(in.good(), ErrorCode::IoFailure, "cannot open plan config " + config_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::BadConfig, std::string("plan JSON parse error: ") + e.what());
    }
    ExperimentPlan plan = plan_from_json(j);

    // Flags override config values.
    plan.master_seed = seed;
    if (threads > 0) plan.threads = threads;
    if (rounds > 0) plan.rounds = rounds;
    if (level > 0) plan.level = level;
    if (!ci_mode.empty()) plan.ci_mode = ci_mode_from_name(ci_mode);
    if (!fractions_csv.empty()) {
        plan.fractions.clear();
        for (const auto& field : popsynth::detail::split_csv_line(fractions_csv)) {
            bool ok = false;
            const double f = parse_number(field, ok);
            require(ok, ErrorCode::BadConfig, "bad fraction '" + field + "'");
            plan.fractions.push_back(f);
        }
    }
    if (!models_csv.empty()) {
        plan.models.clear();
        for (const auto& field : popsynth::detail::split_csv_line(models_csv))
            plan.models.push_back(model_kind_from_name(field));
    }

    const ExperimentReport report = run_experiment(plan);

    std::filesystem::create_directories(std::filesystem::path(out_dir) / "checkpoints");
    ReportFormat format = ReportFormat::both;
    if (format_name == "csv") format = ReportFormat::csv;
    if (format_name == "markdown") format = ReportFormat::markdown;
    emit_grid_report(report, out_dir, format);
    emit_plot_data(report, out_dir);
    emit_raw_records(report, out_dir);
    std::cout << "wrote report for " << report.dataset_ids.size() << " dataset(s) to " << out_dir
              << "\n";
    return kExitOk;
}

int run_report(const std::string& raw_dir, const std::string& out_dir,
               const std::string& format_name) {
    const ExperimentReport report = report_from_raw(raw_dir);
    ReportFormat format = ReportFormat::both;
    if (format_name == "csv") format = ReportFormat::csv;
    if (format_name == "markdown") format = ReportFormat::markdown;
    emit_grid_report(report, out_dir, format);
    emit_plot_data(report, out_dir);
    emit_raw_records(report, out_dir);
    std::cout << "regenerated report in " << out_dir << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabular population synthesis (GAN/VAE) with bootstrap robustness analysis"};
    app.require_subcommand(1);

    // gen-surrogate
    auto* gen = app.add_subcommand("gen-surrogate", "Generate a surrogate survey dataset");
    std::size_t gen_rows = 1000;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    std::string gen_profile;
    std::string gen_schema_out;
    std::string gen_profile_out;
    gen->add_option("--rows", gen_rows, "Number of rows");
    gen->add_option("--seed", gen_seed, "Generation seed");
    gen->add_option("--out", gen_out, "Output CSV path")->required();
    gen->add_option("--profile", gen_profile, "Surrogate profile JSON (default: built-in)");
    gen->add_option("--schema-out", gen_schema_out, "Also write the schema JSON here");
    gen->add_option("--profile-out", gen_profile_out, "Also write the profile JSON here");

    // train
    auto* train = app.add_subcommand("train", "Train a generative model on a CSV dataset");
    std::string train_model;
    std::string train_data;
    std::string train_schema;
    std::string train_out;
    std::uint64_t train_seed = 0;
    TrainFlags train_flags;
    train->add_option("--model", train_model, "gan or vae")->required();
    train->add_option("--data", train_data, "Training CSV")->required();
    train->add_option("--schema", train_schema, "Schema JSON")->required();
    train->add_option("--out", train_out, "Checkpoint output path")->required();
    train->add_option("--seed", train_seed, "Training seed");
    train_flags.add_to(train);

    // synthesize
    auto* synth = app.add_subcommand("synthesize", "Sample a population from a checkpoint");
    std::string synth_model;
    std::size_t synth_count = 1000;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    synth->add_option("--model", synth_model, "Checkpoint path")->required();
    synth->add_option("--count", synth_count, "Rows to synthesize");
    synth->add_option("--seed", synth_seed, "Synthesis seed");
    synth->add_option("--out", synth_out, "Output CSV path")->required();

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "MAE/MSE/RMSE between two datasets");
    std::string eval_data;
    std::string eval_ref;
    std::string eval_schema;
    std::size_t eval_bins = 10;
    std::string eval_mode = "marginal";
    eval->add_option("--data", eval_data, "Dataset CSV (e.g. synthetic)")->required();
    eval->add_option("--ref", eval_ref, "Reference CSV (e.g. held-out real)")->required();
    eval->add_option("--schema", eval_schema, "Schema JSON")->required();
    eval->add_option("--bins", eval_bins, "Numeric bins");
    eval->add_option("--mode", eval_mode, "marginal or joint")
        ->check(CLI::IsMember({"marginal", "joint"}));

    // bootstrap
    auto* boot = app.add_subcommand("bootstrap", "Bootstrap error rounds and CI for one model");
    std::string boot_data;
    std::string boot_schema;
    std::string boot_model;
    double boot_fraction = 1.0;
    int boot_rounds = 16;
    std::uint64_t boot_seed = 0;
    double boot_test_fraction = 0.2;
    double boot_level = 0.95;
    std::string boot_out;
    TrainFlags boot_flags;
    boot->add_option("--data", boot_data, "Dataset CSV")->required();
    boot->add_option("--schema", boot_schema, "Schema JSON")->required();
    boot->add_option("--model", boot_model, "gan or vae")->required();
    boot->add_option("--fraction", boot_fraction, "Train subsample fraction");
    boot->add_option("--rounds", boot_rounds, "Bootstrap rounds (b)");
    boot->add_option("--seed", boot_seed, "Master seed");
    boot->add_option("--test-fraction", boot_test_fraction, "Holdout fraction");
    boot->add_option("--level", boot_level, "CI level");
    boot->add_option("--out", boot_out, "Also write per-round CSV here");
    boot_flags.add_to(boot);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run the full robustness experiment grid");
    std::string sweep_config;
    std::uint64_t sweep_seed = 0;
    std::string sweep_out;
    int sweep_threads = 0;
    int sweep_rounds = 0;
    std::string sweep_fractions;
    std::string sweep_models;
    double sweep_level = 0.0;
    std::string sweep_ci_mode;
    std::string sweep_format = "both";
    sweep->add_option("--config", sweep_config, "Plan JSON")->required();
    sweep->add_option("--seed", sweep_seed, "Master seed")->required();
    sweep->add_option("--out", sweep_out, "Output directory")->required();
    sweep->add_option("--threads", sweep_threads, "Parallel cells (default: config)");
    sweep->add_option("--rounds", sweep_rounds, "Bootstrap rounds override");
    sweep->add_option("--fractions", sweep_fractions, "Comma-separated fraction override");
    sweep->add_option("--models", sweep_models, "Comma-separated model override");
    sweep->add_option("--level", sweep_level, "CI level override");
    sweep->add_option("--ci-mode", sweep_ci_mode,
                      "bootstrap-models or resynthesis-draws override");
    sweep->add_option("--format", sweep_format, "Report format: csv, markdown or both")
        ->check(CLI::IsMember({"csv", "markdown", "both"}));

    // report
    auto* rep = app.add_subcommand("report", "Regenerate report tables from raw round records");
    std::string rep_raw;
    std::string rep_out;
    std::string rep_format = "both";
    rep->add_option("--raw", rep_raw, "Directory holding rounds.csv and meta.json")->required();
    rep->add_option("--out", rep_out, "Output directory")->required();
    rep->add_option("--format", rep_format, "Report format: csv, markdown or both")
        ->check(CLI::IsMember({"csv", "markdown", "both"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen->parsed())
            return run_gen_surrogate(gen_rows, gen_seed, gen_out, gen_profile, gen_schema_out,
                                     gen_profile_out);
        if (train->parsed())
            return run_train(train_model, train_data, train_schema, train_out, train_seed,
                             train_flags);
        if (synth->parsed()) return run_synthesize(synth_model, synth_count, synth_seed, synth_out);
        if (eval->parsed()) return run_evaluate(eval_data, eval_ref, eval_schema, eval_bins,
                                                eval_mode);
        if (boot->parsed())
            return run_bootstrap(boot_data, boot_schema, boot_model, boot_fraction, boot_rounds,
                                 boot_seed, boot_test_fraction, boot_level, boot_out, boot_flags);
        if (sweep->parsed())
            return run_sweep(sweep_config, sweep_seed, sweep_out, sweep_threads, sweep_rounds,
                             sweep_fractions, sweep_models, sweep_level, sweep_ci_mode,
                             sweep_format);
        if (rep->parsed()) return run_report(rep_raw, rep_out, rep_format);
    } catch (const popsynth::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::IoFailure ? kExitRuntime : kExitData;
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
