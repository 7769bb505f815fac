#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "popsynth/csv.hpp"
#include "popsynth/errors.hpp"
#include "popsynth/experiment.hpp"

namespace popsynth {

/// Report precision matches the reference tables: 4 decimal places.
inline std::string format_fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

inline std::string format_percent(double fraction) {
    char buf[32];
    const double pct = fraction * 100.0;
    if (pct == std::floor(pct))
        std::snprintf(buf, sizeof buf, "%d%%", static_cast<int>(pct));
    else
        std::snprintf(buf, sizeof buf, "%g%%", pct);
    return buf;
}

enum class ReportFormat { csv, markdown, both };

namespace detail {

inline void check_complete(const ExperimentReport& report) {
    const std::size_t expected_cells =
        report.dataset_ids.size() * report.models.size() * report.fractions.size();
    require(report.cells.size() == expected_cells, ErrorCode::IncompleteReport,
            "grid cell count does not match the plan");
    const std::size_t expected_cis = report.dataset_ids.size() * report.models.size() * 3;
    require(report.cis.size() == expected_cis, ErrorCode::IncompleteReport,
            "confidence interval count does not match the plan");
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoFailure, "cannot write " + path.string());
    out << text;
    require(out.good(), ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace detail

/// Emits one grid table and one CI table per dataset under dir/report/.
/// Grid rows are fractions, column groups are model x {MAE, MSE, RMSE}; the
/// CI table mirrors the metric x model by {mean, lower, upper} layout.
inline std::vector<std::string> emit_grid_report(const ExperimentReport& report,
                                                 const std::string& out_dir,
                                                 ReportFormat format = ReportFormat::both) {
    detail::check_complete(report);
    const std::filesystem::path dir = std::filesystem::path(out_dir) / "report";
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;

    for (const auto& dataset : report.dataset_ids) {
        // Grid table.
        if (format == ReportFormat::csv || format == ReportFormat::both) {
            std::string text = "train_data";
            for (ModelKind model : report.models)
                for (const char* metric : {"mae", "mse", "rmse"})
                    text += std::string(",") + model_kind_name(model) + "_" + metric;
            text += "\n";
            for (double fraction : report.fractions) {
                text += format_percent(fraction);
                for (ModelKind model : report.models) {
                    const GridCell& cell = report.cell(dataset, model, fraction);
                    text += "," + format_fixed4(cell.mean.mae);
                    text += "," + format_fixed4(cell.mean.mse);
                    text += "," + format_fixed4(cell.mean.rmse);
                }
                text += "\n";
            }
            const auto path = dir / (dataset + "_grid.csv");
            detail::write_text(path, text);
            written.push_back(path.string());
        }
        if (format == ReportFormat::markdown || format == ReportFormat::both) {
            std::string text = "| Train data |";
            std::string rule = "| --- |";
            for (ModelKind model : report.models)
                for (const char* metric : {"MAE", "MSE", "RMSE"}) {
                    text += std::string(" ") + model_kind_name(model) + " " + metric + " |";
                    rule += " --- |";
                }
            text += "\n" + rule + "\n";
            for (double fraction : report.fractions) {
                text += "| " + format_percent(fraction) + " |";
                for (ModelKind model : report.models) {
                    const GridCell& cell = report.cell(dataset, model, fraction);
                    text += " " + format_fixed4(cell.mean.mae) + " |";
                    text += " " + format_fixed4(cell.mean.mse) + " |";
                    text += " " + format_fixed4(cell.mean.rmse) + " |";
                }
                text += "\n";
            }
            const auto path = dir / (dataset + "_grid.md");
            detail::write_text(path, text);
            written.push_back(path.string());
        }

        // CI table: one row per metric x model.
        auto ci_rows = [&]() {
            std::vector<const CiEntry*> rows;
            for (const char* metric : {"MAE", "MSE", "RMSE"})
                for (ModelKind model : report.models)
                    for (const auto& entry : report.cis)
                        if (entry.dataset == dataset && entry.model == model &&
                            entry.metric == metric)
                            rows.push_back(&entry);
            return rows;
        }();
        if (format == ReportFormat::csv || format == ReportFormat::both) {
            std::string text = "metric,model,mean,lower,upper\n";
            for (const CiEntry* entry : ci_rows) {
                text += entry->metric;
                text += std::string(",") + model_kind_name(entry->model);
                text += "," + format_fixed4(entry->ci.mean);
                text += "," + format_fixed4(entry->ci.lower);
                text += "," + format_fixed4(entry->ci.upper) + "\n";
            }
            const auto path = dir / (dataset + "_ci.csv");
            detail::write_text(path, text);
            written.push_back(path.string());
        }
        if (format == ReportFormat::markdown || format == ReportFormat::both) {
            std::string text = "| Metric | Model | Mean | Lower | Upper |\n";
            text += "| --- | --- | --- | --- | --- |\n";
            for (const CiEntry* entry : ci_rows) {
                text += "| " + entry->metric + " | " + model_kind_name(entry->model) + " | " +
                        format_fixed4(entry->ci.mean) + " | " + format_fixed4(entry->ci.lower) +
                        " | " + format_fixed4(entry->ci.upper) + " |\n";
            }
            const auto path = dir / (dataset + "_ci.md");
            detail::write_text(path, text);
            written.push_back(path.string());
        }
    }
    return written;
}

/// Per (dataset, model, metric): a two-column series (fraction, value) with
/// fractions ascending, under dir/plotdata/. Values are the grid cells,
/// rendered identically to the grid report.
inline std::vector<std::string> emit_plot_data(const ExperimentReport& report,
                                               const std::string& out_dir) {
    detail::check_complete(report);
    const std::filesystem::path dir = std::filesystem::path(out_dir) / "plotdata";
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;

    std::vector<double> fractions = report.fractions;
    std::sort(fractions.begin(), fractions.end());

    for (const auto& dataset : report.dataset_ids) {
        for (ModelKind model : report.models) {
            const char* metrics[3] = {"mae", "mse", "rmse"};
            for (int k = 0; k < 3; ++k) {
                std::string text;
                for (double fraction : fractions) {
                    const GridCell& cell = report.cell(dataset, model, fraction);
                    const double value = k == 0   ? cell.mean.mae
                                         : k == 1 ? cell.mean.mse
                                                  : cell.mean.rmse;
                    text += format_number(fraction) + " " + format_fixed4(value) + "\n";
                }
                const auto path =
                    dir / (dataset + "_" + model_kind_name(model) + "_" + metrics[k] + ".txt");
                detail::write_text(path, text);
                written.push_back(path.string());
            }
        }
    }
    return written;
}

/// Raw per-round records under dir/raw/: rounds.csv with exact (shortest
/// round-trip) numbers plus meta.json describing the grid, so reports can be
/// regenerated from the raw records alone.
inline std::vector<std::string> emit_raw_records(const ExperimentReport& report,
                                                 const std::string& out_dir) {
    const std::filesystem::path dir = std::filesystem::path(out_dir) / "raw";
    std::filesystem::create_directories(dir);

    std::string text = "dataset,model,fraction,round,mae,mse,rmse,seed\n";
    for (const auto& record : report.raw) {
        text += record.dataset;
        text += std::string(",") + model_kind_name(record.model);
        text += "," + format_number(record.fraction);
        text += "," + std::to_string(record.round);
        text += "," + format_number(record.error.mae);
        text += "," + format_number(record.error.mse);
        text += "," + format_number(record.error.rmse);
        text += "," + std::to_string(record.seed) + "\n";
    }
    const auto csv_path = dir / "rounds.csv";
    detail::write_text(csv_path, text);

    nlohmann::json meta;
    meta["datasets"] = report.dataset_ids;
    nlohmann::json models = nlohmann::json::array();
    for (ModelKind m : report.models) models.push_back(model_kind_name(m));
    meta["models"] = std::move(models);
    meta["fractions"] = report.fractions;
    meta["rounds"] = report.rounds;
    meta["level"] = report.level;
    meta["ci_mode"] = ci_mode_name(report.ci_mode);
    const auto meta_path = dir / "meta.json";
    detail::write_text(meta_path, meta.dump(2) + "\n");

    return {csv_path.string(), meta_path.string()};
}

/// Rebuilds a full report (cells, CIs, raw echo) from raw/rounds.csv and
/// raw/meta.json. Reported numbers are projections of the raw records; no
/// model is retrained.
inline ExperimentReport report_from_raw(const std::string& raw_dir) {
    const std::filesystem::path dir(raw_dir);
    std::ifstream meta_in(dir / "meta.json");
    require(meta_in.good(), ErrorCode::IoFailure,
            "cannot open " + (dir / "meta.json").string());
    nlohmann::json meta;
    try {
        meta_in >> meta;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::CorruptFile, std::string("bad raw meta.json: ") + e.what());
    }

    ExperimentReport report;
    try {
        report.dataset_ids = meta.at("datasets").get<std::vector<std::string>>();
        for (const auto& m : meta.at("models"))
            report.models.push_back(model_kind_from_name(m.get<std::string>()));
        report.fractions = meta.at("fractions").get<std::vector<double>>();
        report.rounds = meta.at("rounds").get<int>();
        report.level = meta.at("level").get<double>();
        report.ci_mode = ci_mode_from_name(meta.at("ci_mode").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::CorruptFile, std::string("bad raw meta.json: ") + e.what());
    }

    std::ifstream in(dir / "rounds.csv");
    require(in.good(), ErrorCode::IoFailure, "cannot open " + (dir / "rounds.csv").string());
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::CorruptFile,
            "rounds.csv missing header");
    require(detail::trim(line) == "dataset,model,fraction,round,mae,mse,rmse,seed",
            ErrorCode::CorruptFile, "rounds.csv header mismatch");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        require(fields.size() == 8, ErrorCode::CorruptFile, "rounds.csv row width mismatch");
        RoundRecord record;
        record.dataset = fields[0];
        record.model = model_kind_from_name(fields[1]);
        bool ok = true;
        bool all_ok = true;
        record.fraction = parse_number(fields[2], ok);
        all_ok = all_ok && ok;
        record.round = static_cast<int>(parse_number(fields[3], ok));
        all_ok = all_ok && ok;
        record.error.mae = parse_number(fields[4], ok);
        all_ok = all_ok && ok;
        record.error.mse = parse_number(fields[5], ok);
        all_ok = all_ok && ok;
        record.error.rmse = parse_number(fields[6], ok);
        all_ok = all_ok && ok;
        record.seed = static_cast<std::uint64_t>(std::stoull(fields[7]));
        require(all_ok, ErrorCode::CorruptFile, "rounds.csv has unparseable numbers");
        report.raw.push_back(std::move(record));
    }

    // Grid cells from the bootstrap rounds (round < b).
    for (const auto& dataset : report.dataset_ids) {
        for (ModelKind model : report.models) {
            for (double fraction : report.fractions) {
                std::vector<ErrorTriple> triples;
                for (const auto& record : report.raw)
                    if (record.dataset == dataset && record.model == model &&
                        record.fraction == fraction && record.round < report.rounds)
                        triples.push_back(record.error);
                require(!triples.empty(), ErrorCode::IncompleteReport,
                        "raw records missing a grid cell");
                GridCell cell;
                cell.dataset = dataset;
                cell.model = model;
                cell.fraction = fraction;
                cell.mean = mean_triple(triples);
                cell.rounds = static_cast<int>(triples.size());
                report.cells.push_back(std::move(cell));
            }
        }
    }

    double ci_fraction = report.fractions.front();
    for (double f : report.fractions) ci_fraction = std::max(ci_fraction, f);

    for (const auto& dataset : report.dataset_ids) {
        for (ModelKind model : report.models) {
            std::vector<ErrorTriple> source;
            for (const auto& record : report.raw) {
                if (record.dataset != dataset || record.model != model) continue;
                const bool is_ci_round = report.ci_mode == CiMode::bootstrap_models
                                             ? (record.fraction == ci_fraction &&
                                                record.round < report.rounds)
                                             : record.round >= report.rounds;
                if (is_ci_round) source.push_back(record.error);
            }
            require(!source.empty(), ErrorCode::IncompleteReport,
                    "raw records missing CI rounds");
            auto values_of = [&](auto proj) {
                std::vector<double> v;
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
                entry.dataset = dataset;
                entry.model = model;
                entry.metric = names[k];
                entry.ci = source.size() >= 2
                               ? percentile_ci(metric_values[k], report.level)
                               : ConfidenceInterval{metric_values[k][0], metric_values[k][0],
                                                    metric_values[k][0], report.level, 1};
                report.cis.push_back(std::move(entry));
            }
        }
    }
    return report;
}

}  // namespace popsynth
