#pragma once

#include <cstdint>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "popsynth/codec.hpp"
#include "popsynth/csv.hpp"
#include "popsynth/errors.hpp"
#include "popsynth/metrics.hpp"
#include "popsynth/models.hpp"
#include "popsynth/sampling.hpp"
#include "popsynth/stats.hpp"
#include "popsynth/survey.hpp"

namespace popsynth {

enum class ModelKind { gan, vae };

inline const char* model_kind_name(ModelKind k) { return k == ModelKind::gan ? "gan" : "vae"; }

inline ModelKind model_kind_from_name(const std::string& s) {
    if (s == "gan") return ModelKind::gan;
    if (s == "vae") return ModelKind::vae;
    fail(ErrorCode::BadValue, "unknown model kind '" + s + "'");
}

/// How the per-(dataset, model) confidence interval is sourced:
/// bootstrap_models takes the per-round errors of the largest fraction's
/// independently trained models; resynthesis_draws trains one model on the
/// full train split and scores b synthesis draws against the held-out test
/// set.
enum class CiMode { bootstrap_models, resynthesis_draws };

inline const char* ci_mode_name(CiMode m) {
    return m == CiMode::bootstrap_models ? "bootstrap-models" : "resynthesis-draws";
}

inline CiMode ci_mode_from_name(const std::string& s) {
    if (s == "bootstrap-models") return CiMode::bootstrap_models;
    if (s == "resynthesis-draws") return CiMode::resynthesis_draws;
    fail(ErrorCode::BadValue, "unknown ci mode '" + s + "'");
}

/// A dataset slot in a plan: either file-backed or supplied in memory.
struct DatasetSpec {
    std::string id;
    std::string data_path;
    std::string schema_path;
    std::optional<SurveyTable> table;

    SurveyTable resolve() const {
        if (table) return *table;
        return load_csv(data_path, load_schema(schema_path));
    }
};

struct ExperimentPlan {
    std::vector<DatasetSpec> datasets;
    std::vector<ModelKind> models = {ModelKind::gan, ModelKind::vae};
    std::vector<double> fractions = {0.25, 0.5, 0.75, 1.0};
    int rounds = 16;
    double level = 0.95;
    CiMode ci_mode = CiMode::bootstrap_models;
    double test_fraction = 0.2;
    std::size_t numeric_bins = 10;
    std::uint64_t master_seed = 0;
    TrainConfig train_gan;
    TrainConfig train_vae;
    int threads = 1;

    const TrainConfig& config_for(ModelKind kind) const {
        return kind == ModelKind::gan ? train_gan : train_vae;
    }

    void validate() const {
        require(!datasets.empty(), ErrorCode::BadConfig, "plan needs at least one dataset");
        require(!models.empty(), ErrorCode::BadConfig, "plan needs at least one model");
        require(!fractions.empty(), ErrorCode::BadConfig, "plan needs at least one fraction");
        for (double f : fractions)
            require(f > 0.0 && f <= 1.0, ErrorCode::BadConfig, "fractions must be in (0, 1]");
        require(rounds >= 1, ErrorCode::BadConfig, "rounds must be >= 1");
        require(level > 0.0 && level < 1.0, ErrorCode::BadConfig, "level must be in (0, 1)");
        require(test_fraction > 0.0 && test_fraction < 1.0, ErrorCode::BadConfig,
                "test_fraction must be in (0, 1)");
        require(threads >= 1, ErrorCode::BadConfig, "threads must be >= 1");
        train_gan.validate();
        train_vae.validate();
    }
};

struct RoundRecord {
    std::string dataset;
    ModelKind model = ModelKind::gan;
    double fraction = 1.0;
    int round = 0;
    ErrorTriple error;
    std::uint64_t seed = 0;
};

/// Table-2-style cell: mean of the per-round MAEs and MSEs; RMSE is the
/// square root of the mean MSE so the rmse = sqrt(mse) identity holds for
/// reported values exactly as it does in per-round triples.
struct GridCell {
    std::string dataset;
    ModelKind model = ModelKind::gan;
    double fraction = 1.0;
    ErrorTriple mean;
    int rounds = 0;
};

struct CiEntry {
    std::string dataset;
    ModelKind model = ModelKind::gan;
    std::string metric;  // MAE | MSE | RMSE
    ConfidenceInterval ci;
};

struct ExperimentReport {
    std::vector<std::string> dataset_ids;
    std::vector<ModelKind> models;
    std::vector<double> fractions;
    int rounds = 0;
    double level = 0.95;
    CiMode ci_mode = CiMode::bootstrap_models;
    std::vector<GridCell> cells;
    std::vector<CiEntry> cis;
    std::vector<RoundRecord> raw;

    const GridCell& cell(const std::string& dataset, ModelKind model, double fraction) const {
        for (const auto& c : cells)
            if (c.dataset == dataset && c.model == model && c.fraction == fraction) return c;
        fail(ErrorCode::IncompleteReport, "missing grid cell for " + dataset);
    }
};

inline ErrorTriple mean_triple(const std::vector<ErrorTriple>& rounds) {
    require(!rounds.empty(), ErrorCode::EmptyList, "mean of no rounds");
    ErrorTriple out;
    for (const auto& t : rounds) {
        out.mae += t.mae;
        out.mse += t.mse;
    }
    out.mae /= static_cast<double>(rounds.size());
    out.mse /= static_cast<double>(rounds.size());
    out.rmse = std::sqrt(out.mse);
    return out;
}

/// Inspection hook for the test-set-isolation invariant: called once per
/// round with the indices that entered training and the held-out test
/// indices.
struct RoundProbe {
    int round = 0;
    const IndexList* bootstrap_sample = nullptr;
    const IndexList* out_of_bag = nullptr;
    const IndexList* test_indices = nullptr;
};
using ProbeFn = std::function<void(const RoundProbe&)>;

namespace detail {

/// Documented grid seed derivation: every round seed is a pure function of
/// (master seed, dataset id, model id, fraction index, round index).
inline std::uint64_t grid_round_seed(std::uint64_t master, const std::string& dataset_id,
                                     ModelKind model, std::size_t fraction_index,
                                     std::size_t round_index) {
    return derive_seed(master, fnv1a64(dataset_id), fnv1a64(model_kind_name(model)),
                       static_cast<std::uint64_t>(fraction_index),
                       static_cast<std::uint64_t>(round_index));
}

inline std::uint64_t dataset_split_seed(std::uint64_t master, const std::string& dataset_id) {
    return derive_seed(master, fnv1a64(dataset_id), fnv1a64("holdout"));
}

/// Trains a fresh model of the requested kind on the given rows and
/// synthesizes `count` agents.
inline SurveyTable train_and_synthesize(const SurveyTable& train_rows, ModelKind kind,
                                        TrainConfig config, std::uint64_t seed,
                                        std::size_t count) {
    const BlockLayout layout = build_layout(train_rows.schema());
    const EncodedMatrix encoded = encode(train_rows, layout);
    config.seed = derive_seed(seed, fnv1a64("train"));
    if (kind == ModelKind::gan) {
        GanModel model = gan_init(layout, config, derive_seed(seed, fnv1a64("init")));
        gan_train(model, encoded, config);
        return synthesize(model, count, derive_seed(seed, fnv1a64("synth")));
    }
    VaeModel model = vae_init(layout, config, derive_seed(seed, fnv1a64("init")));
    vae_train(model, encoded, config);
    return synthesize(model, count, derive_seed(seed, fnv1a64("synth")));
}

/// One bootstrap round: subsample the train indices to the fraction,
/// resample with replacement, fit a fresh model, score on the out-of-bag
/// rows.
inline ErrorTriple bootstrap_round(const SurveyTable& dataset, const SplitHandle& split,
                                   ModelKind kind, double fraction, const TrainConfig& config,
                                   std::uint64_t round_seed, std::size_t numeric_bins,
                                   int round_index, const ProbeFn& probe) {
    const IndexList fraction_idx =
        subsample(split.train_indices, fraction, derive_seed(round_seed, fnv1a64("fraction")));
    const BootstrapSample draw =
        bootstrap_resample(fraction_idx, derive_seed(round_seed, fnv1a64("resample")));
    if (probe) {
        RoundProbe p;
        p.round = round_index;
        p.bootstrap_sample = &draw.sample;
        p.out_of_bag = &draw.out_of_bag;
        p.test_indices = &split.test_indices;
        probe(p);
    }

    const IndexList& eval_idx =
        draw.out_of_bag.empty() ? split.test_indices : draw.out_of_bag;
    require(!eval_idx.empty(), ErrorCode::EmptyData,
            "no out-of-bag or test rows available for evaluation");

    const SurveyTable train_rows = dataset.select_rows(draw.sample);
    const SurveyTable synth =
        train_and_synthesize(train_rows, kind, config, round_seed, eval_idx.size());
    const SurveyTable eval_rows = dataset.select_rows(eval_idx);
    return error_triple(eval_vector(synth, numeric_bins, EvalMode::marginal, "synthetic"),
                        eval_vector(eval_rows, numeric_bins, EvalMode::marginal, "out-of-bag"));
}

}  // namespace detail

/// The bootstrap error procedure for one (dataset, model, fraction): b
/// rounds of subsample + resample + fit + out-of-bag scoring. The holdout
/// split is made internally and the test rows never enter any draw.
inline std::vector<ErrorTriple> bootstrap_errors(const SurveyTable& dataset, ModelKind kind,
                                                 double fraction, int b,
                                                 const TrainConfig& config,
                                                 std::uint64_t master_seed,
                                                 double test_fraction = 0.2,
                                                 std::size_t numeric_bins = 10,
                                                 const ProbeFn& probe = nullptr) {
    require(b >= 1, ErrorCode::BadConfig, "need at least one bootstrap round");
    require(!dataset.empty(), ErrorCode::EmptyData, "bootstrap_errors needs data");
    const SplitHandle split =
        split_holdout(dataset, test_fraction, detail::dataset_split_seed(master_seed, "dataset"));
    std::vector<ErrorTriple> errors;
    errors.reserve(static_cast<std::size_t>(b));
    for (int j = 0; j < b; ++j) {
        const std::uint64_t round_seed =
            detail::grid_round_seed(master_seed, "dataset", kind, 0, static_cast<std::size_t>(j));
        errors.push_back(detail::bootstrap_round(dataset, split, kind, fraction, config,
                                                 round_seed, numeric_bins, j, probe));
    }
    return errors;
}

/// Runs the full grid: datasets x models x fractions x b rounds, plus one CI
/// per (dataset, model, metric). Every seed derives from the master seed, so
/// reports are byte-reproducible at any thread count; cells run in parallel
/// when plan.threads > 1 and results are collected in canonical order.
inline ExperimentReport run_experiment(const ExperimentPlan& plan) {
    plan.validate();

    ExperimentReport report;
    report.models = plan.models;
    report.fractions = plan.fractions;
    report.rounds = plan.rounds;
    report.level = plan.level;
    report.ci_mode = plan.ci_mode;

    struct LoadedDataset {
        std::string id;
        SurveyTable table;
        SplitHandle split;
    };
    std::vector<LoadedDataset> loaded;
    for (const auto& spec : plan.datasets) {
        LoadedDataset d;
        d.id = spec.id;
        d.table = spec.resolve();
        require(!d.table.empty(), ErrorCode::EmptyData, "dataset '" + spec.id + "' is empty");
        d.split = split_holdout(d.table, plan.test_fraction,
                                detail::dataset_split_seed(plan.master_seed, spec.id));
        report.dataset_ids.push_back(spec.id);
        loaded.push_back(std::move(d));
    }

    // Largest fraction feeds the bootstrap-models CI.
    std::size_t ci_fraction_index = 0;
    for (std::size_t i = 1; i < plan.fractions.size(); ++i)
        if (plan.fractions[i] > plan.fractions[ci_fraction_index]) ci_fraction_index = i;

    struct CellTask {
        std::size_t dataset_index;
        std::size_t model_index;
        std::size_t fraction_index;
    };
    std::vector<CellTask> tasks;
    for (std::size_t d = 0; d < loaded.size(); ++d)
        for (std::size_t m = 0; m < plan.models.size(); ++m)
            for (std::size_t f = 0; f < plan.fractions.size(); ++f) tasks.push_back({d, m, f});

    auto run_cell = [&](const CellTask& task) {
        const LoadedDataset& data = loaded[task.dataset_index];
        const ModelKind kind = plan.models[task.model_index];
        const double fraction = plan.fractions[task.fraction_index];
        const TrainConfig& config = plan.config_for(kind);
        std::vector<RoundRecord> records;
        records.reserve(static_cast<std::size_t>(plan.rounds));
        for (int j = 0; j < plan.rounds; ++j) {
            const std::uint64_t round_seed = detail::grid_round_seed(
                plan.master_seed, data.id, kind, task.fraction_index,
                static_cast<std::size_t>(j));
            RoundRecord record;
            record.dataset = data.id;
            record.model = kind;
            record.fraction = fraction;
            record.round = j;
            record.seed = round_seed;
            record.error = detail::bootstrap_round(data.table, data.split, kind, fraction,
                                                   config, round_seed, plan.numeric_bins, j,
                                                   nullptr);
            records.push_back(std::move(record));
        }
        return records;
    };

    std::vector<std::vector<RoundRecord>> cell_records(tasks.size());
    if (plan.threads <= 1) {
        for (std::size_t t = 0; t < tasks.size(); ++t) cell_records[t] = run_cell(tasks[t]);
    } else {
        std::size_t next = 0;
        while (next < tasks.size()) {
            const std::size_t batch =
                std::min<std::size_t>(static_cast<std::size_t>(plan.threads),
                                      tasks.size() - next);
            std::vector<std::future<std::vector<RoundRecord>>> futures;
            futures.reserve(batch);
            for (std::size_t i = 0; i < batch; ++i)
                futures.push_back(std::async(std::launch::async, run_cell, tasks[next + i]));
            for (std::size_t i = 0; i < batch; ++i)
                cell_records[next + i] = futures[i].get();
            next += batch;
        }
    }

    for (std::size_t t = 0; t < tasks.size(); ++t) {
        std::vector<ErrorTriple> triples;
        for (const auto& record : cell_records[t]) {
            triples.push_back(record.error);
            report.raw.push_back(record);
        }
        GridCell cell;
        cell.dataset = loaded[tasks[t].dataset_index].id;
        cell.model = plan.models[tasks[t].model_index];
        cell.fraction = plan.fractions[tasks[t].fraction_index];
        cell.mean = mean_triple(triples);
        cell.rounds = plan.rounds;
        report.cells.push_back(std::move(cell));
    }

    // Confidence intervals per (dataset, model, metric).
    for (std::size_t d = 0; d < loaded.size(); ++d) {
        for (std::size_t m = 0; m < plan.models.size(); ++m) {
            const ModelKind kind = plan.models[m];
            std::vector<ErrorTriple> source;
            if (plan.ci_mode == CiMode::bootstrap_models) {
                for (std::size_t t = 0; t < tasks.size(); ++t)
                    if (tasks[t].dataset_index == d && tasks[t].model_index == m &&
                        tasks[t].fraction_index == ci_fraction_index)
                        for (const auto& record : cell_records[t]) source.push_back(record.error);
            } else {
                const LoadedDataset& data = loaded[d];
                const SurveyTable train_rows = data.table.select_rows(data.split.train_indices);
                const SurveyTable test_rows = data.table.select_rows(data.split.test_indices);
                require(!test_rows.empty(), ErrorCode::EmptyData,
                        "resynthesis mode needs a non-empty test split");
                const std::uint64_t model_seed = derive_seed(
                    plan.master_seed, fnv1a64(data.id), fnv1a64(model_kind_name(kind)),
                    fnv1a64("resynthesis"));
                const BlockLayout layout = build_layout(train_rows.schema());
                const EncodedMatrix encoded = encode(train_rows, layout);
                TrainConfig config = plan.config_for(kind);
                config.seed = derive_seed(model_seed, fnv1a64("train"));
                const EvalVector test_vec =
                    eval_vector(test_rows, plan.numeric_bins, EvalMode::marginal, "test");

                auto score_draws = [&](auto& model) {
                    for (int j = 0; j < plan.rounds; ++j) {
                        const std::uint64_t draw_seed =
                            derive_seed(model_seed, fnv1a64("draw"), static_cast<std::uint64_t>(j));
                        const SurveyTable synth =
                            synthesize(model, test_rows.row_count(), draw_seed);
                        RoundRecord record;
                        record.dataset = data.id;
                        record.model = kind;
                        record.fraction = 1.0;
                        record.round = plan.rounds + j;
                        record.seed = draw_seed;
                        record.error = error_triple(
                            eval_vector(synth, plan.numeric_bins, EvalMode::marginal, "synthetic"),
                            test_vec);
                        source.push_back(record.error);
                        report.raw.push_back(std::move(record));
                    }
                };
                if (kind == ModelKind::gan) {
                    GanModel model =
                        gan_init(layout, config, derive_seed(model_seed, fnv1a64("init")));
                    gan_train(model, encoded, config);
                    score_draws(model);
                } else {
                    VaeModel model =
                        vae_init(layout, config, derive_seed(model_seed, fnv1a64("init")));
                    vae_train(model, encoded, config);
                    score_draws(model);
                }
            }

            auto values_of = [&](auto proj) {
                std::vector<double> v;
                v.reserve(source.size());
                for (const auto& e : source) v.push_back(proj(e));
                return v;
            };
            const char* names[3] = {"MAE", "MSE", "RMSE"};
            std::vector<double> metric_values[3] = {
                values_of([](const ErrorTriple& e) { return e.mae; }),
                values_of([](const ErrorTriple& e) { return e.mse; }),
                values_of([](const ErrorTriple& e) { return e.rmse; }),
            };
            for (int k = 0; k < 3; ++k) {
                CiEntry entry;
                entry.dataset = loaded[d].id;
                entry.model = kind;
                entry.metric = names[k];
                entry.ci = plan.rounds >= 2
                               ? percentile_ci(metric_values[k], plan.level)
                               : ConfidenceInterval{metric_values[k][0], metric_values[k][0],
                                                    metric_values[k][0], plan.level, 1};
                report.cis.push_back(std::move(entry));
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Plan JSON
// ---------------------------------------------------------------------------

inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {}) {
    base.epochs = j.value("epochs", base.epochs);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.lr_generator = j.value("lr_generator", base.lr_generator);
    base.lr_discriminator = j.value("lr_discriminator", base.lr_discriminator);
    base.lr_vae = j.value("lr_vae", base.lr_vae);
    base.noise_dim = j.value("noise_dim", base.noise_dim);
    base.latent_dim = j.value("latent_dim", base.latent_dim);
    if (j.contains("gan_hidden")) base.gan_hidden = j["gan_hidden"].get<std::vector<std::size_t>>();
    if (j.contains("vae_encoder_hidden"))
        base.vae_encoder_hidden = j["vae_encoder_hidden"].get<std::vector<std::size_t>>();
    if (j.contains("vae_decoder_hidden"))
        base.vae_decoder_hidden = j["vae_decoder_hidden"].get<std::vector<std::size_t>>();
    base.kl_weight = j.value("kl_weight", base.kl_weight);
    return base;
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
    return nlohmann::json{
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"lr_generator", c.lr_generator},
        {"lr_discriminator", c.lr_discriminator},
        {"lr_vae", c.lr_vae},
        {"noise_dim", c.noise_dim},
        {"latent_dim", c.latent_dim},
        {"gan_hidden", c.gan_hidden},
        {"vae_encoder_hidden", c.vae_encoder_hidden},
        {"vae_decoder_hidden", c.vae_decoder_hidden},
        {"kl_weight", c.kl_weight},
    };
}

inline ExperimentPlan plan_from_json(const nlohmann::json& j) {
    ExperimentPlan plan;
    try {
        require(j.contains("datasets") && j["datasets"].is_array(), ErrorCode::BadConfig,
                "plan needs a 'datasets' array");
        for (const auto& d : j["datasets"]) {
            DatasetSpec spec;
            spec.id = d.at("id").get<std::string>();
            spec.data_path = d.at("data").get<std::string>();
            spec.schema_path = d.at("schema").get<std::string>();
            plan.datasets.push_back(std::move(spec));
        }
        if (j.contains("models")) {
            plan.models.clear();
            for (const auto& m : j["models"])
                plan.models.push_back(model_kind_from_name(m.get<std::string>()));
        }
        if (j.contains("fractions")) plan.fractions = j["fractions"].get<std::vector<double>>();
        plan.rounds = j.value("rounds", plan.rounds);
        plan.level = j.value("level", plan.level);
        if (j.contains("ci_mode"))
            plan.ci_mode = ci_mode_from_name(j["ci_mode"].get<std::string>());
        plan.test_fraction = j.value("test_fraction", plan.test_fraction);
        plan.numeric_bins = j.value("numeric_bins", plan.numeric_bins);
        plan.master_seed = j.value("seed", plan.master_seed);
        plan.threads = j.value("threads", plan.threads);
        TrainConfig shared;
        if (j.contains("train")) shared = train_config_from_json(j["train"]);
        plan.train_gan = j.contains("train_gan") ? train_config_from_json(j["train_gan"], shared)
                                                 : shared;
        plan.train_vae = j.contains("train_vae") ? train_config_from_json(j["train_vae"], shared)
                                                 : shared;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::BadConfig, std::string("bad plan JSON: ") + e.what());
    }
    return plan;
}

}  // namespace popsynth
