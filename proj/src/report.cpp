#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ppmkit/csv.hpp"
#include "ppmkit/experiment.hpp"

namespace ppm {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string fmt_num(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

std::string fmt_full(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

struct TableRow {
    std::string use_case, model, hash, all_df, mean_std, best, significance, occurrence, delta;
};

std::vector<TableRow> metric_table(const ExperimentReport& report) {
    std::vector<TableRow> rows;
    for (const auto& name : report.predictor_order) {
        auto it = report.summaries.find(name);
        if (it == report.summaries.end()) continue;
        const PredictorSummary& s = it->second;

        TableRow row;
        row.use_case = report.config.name;
        if (name == "llm" || name == "llm_hashed") {
            row.model = report.config.llm.model_name;
            row.hash = name == "llm" ? "no" : "yes";
        } else {
            row.model = name;
            row.hash = "-";
        }
        row.all_df = s.all_df ? fmt_num(*s.all_df) : "-";
        row.mean_std = s.has_runs ? fmt_num(s.mean) + " ± " + fmt_num(s.stddev) : "-";
        row.best = (name == "llm" || report.wilcoxon_vs_llm.count(name))
                       ? std::to_string(s.best_total)
                       : "-";
        row.significance = s.significance;
        row.occurrence = s.occurrence ? std::to_string(*s.occurrence) : "-";
        row.delta = s.delta_llm;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::string> table_header(const ExperimentReport& report) {
    return {"Use Case",
            "Model",
            "hash",
            "all_df",
            std::to_string(report.config.n_train) + " ± σ",
            "#best",
            "Significance",
            "Occurrence",
            "ΔLLM"};
}

void write_markdown(const ExperimentReport& report, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot write '", path.string(), "'");

    bool regression = report.config.schema.kpi == KpiKind::TotalTime;
    out << "# Experiment Report: " << report.config.name << "\n\n";
    out << "- log: `" << report.config.log_path << "` (digest " << report.log_digest << ")\n";
    out << "- t_split: " << report.t_split << " (train " << report.train_size << ", test "
        << report.test_size << ", skipped " << report.skipped_cases << ")\n";
    out << "- repetitions: " << report.runs.size() << ", n_train: " << report.config.n_train
        << "\n";
    out << "- config digest: " << report.config_digest << "\n";
    if (!report.cache_digest.empty()) out << "- cache digest: " << report.cache_digest << "\n";
    out << "\n";

    out << "## " << (regression ? "MAE (minutes)" : "F1-Score")
        << " — hashed/non-hashed prompts\n\n";
    auto header = table_header(report);
    out << "|";
    for (const auto& h : header) out << " " << h << " |";
    out << "\n|";
    for (std::size_t i = 0; i < header.size(); ++i) out << "---|";
    out << "\n";
    for (const auto& row : metric_table(report)) {
        out << "| " << row.use_case << " | " << row.model << " | " << row.hash << " | "
            << row.all_df << " | " << row.mean_std << " | " << row.best << " | "
            << row.significance << " | " << row.occurrence << " | " << row.delta << " |\n";
    }
    out << "\n";

    out << "## Statistical tests\n\n";
    out << "| Comparison | Test | Statistic | p-value | Decision |\n|---|---|---|---|---|\n";
    for (const auto& [learner, result] : report.wilcoxon_vs_llm) {
        out << "| llm vs " << learner << " | " << result.test << " | " << fmt_num(result.statistic)
            << " | " << fmt_num(result.p_value) << " | "
            << (result.decision == Decision::Reject ? "reject" : "retain")
            << (result.degenerate ? " (degenerate)" : "") << " |\n";
    }
    if (report.hash_comparison) {
        const TestResult& result = *report.hash_comparison;
        out << "| plain vs hashed | " << result.test << " | " << fmt_num(result.statistic)
            << " | " << fmt_num(result.p_value) << " | "
            << (result.decision == Decision::Reject ? "reject" : "retain")
            << (result.degenerate ? " (degenerate)" : "") << " |\n";
    }
    out << "\n";

    if (report.gt) {
        out << "## Novel β-learner discovery rate\n\n";
        out << "| Task | Expected Novel β-Learners |\n|---|---|\n";
        out << "| " << (regression ? "Total Time" : "Activity Occurrence") << " | ";
        bool first = true;
        for (double m : report.config.good_turing_m) {
            if (!first) out << ", ";
            first = false;
            char buf[64];
            std::snprintf(buf, sizeof(buf), "m=%g: %.3f", m, report.gt->expected_novel(m));
            out << buf;
        }
        out << " |\n\n";
    }

    if (!report.convergence.empty()) {
        out << "## KPI convergence\n\n| n | distance |\n|---|---|\n";
        for (const auto& [n, d] : report.convergence) {
            out << "| " << n << " | " << fmt_num(d) << " |\n";
        }
        out << "\n";
    }
}

void write_metric_csv(const ExperimentReport& report, const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : metric_table(report)) {
        rows.push_back({row.use_case, row.model, row.hash, row.all_df, row.mean_std, row.best,
                        row.significance, row.occurrence, row.delta});
    }
    write_csv_file(path.string(), table_header(report), rows);
}

void write_tests_csv(const ExperimentReport& report, const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [learner, result] : report.wilcoxon_vs_llm) {
        rows.push_back({"llm vs " + learner, result.test, fmt_full(result.statistic),
                        fmt_full(result.p_value),
                        result.decision == Decision::Reject ? "reject" : "retain",
                        result.degenerate ? "degenerate" : result.note});
    }
    if (report.hash_comparison) {
        const TestResult& result = *report.hash_comparison;
        rows.push_back({"plain vs hashed", result.test, fmt_full(result.statistic),
                        fmt_full(result.p_value),
                        result.decision == Decision::Reject ? "reject" : "retain",
                        result.degenerate
                            ? "degenerate"
                            : "critical_difference=" + fmt_full(result.critical_difference)});
    }
    write_csv_file(path.string(), {"comparison", "test", "statistic", "p_value", "decision", "note"},
                   rows);
}

void write_good_turing_csv(const ExperimentReport& report, const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    if (report.gt) {
        const GoodTuringEstimate& gt = *report.gt;
        for (const auto& [family, count] : gt.counts) {
            rows.push_back({"count", family, std::to_string(count)});
        }
        rows.push_back({"N", "", std::to_string(gt.total)});
        auto n1 = gt.freq_of_freq.find(1);
        rows.push_back({"N1", "", std::to_string(n1 == gt.freq_of_freq.end() ? 0 : n1->second)});
        rows.push_back({"p0", "", fmt_full(gt.p0)});
        for (double m : report.config.good_turing_m) {
            rows.push_back({"expected_novel", fmt_num(m), fmt_full(gt.expected_novel(m))});
        }
    }
    write_csv_file(path.string(), {"entry", "key", "value"}, rows);
}

void write_convergence_csv(const ExperimentReport& report, const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [n, d] : report.convergence) {
        rows.push_back({std::to_string(n), fmt_full(d)});
    }
    write_csv_file(path.string(), {"n", "distance"}, rows);
}

void write_per_run_csv(const ExperimentReport& report, const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t r = 0; r < report.runs.size(); ++r) {
        const RunResult& run = report.runs[r];
        for (const auto& [predictor, value] : run.metric_by_predictor) {
            rows.push_back({std::to_string(r + 1), std::to_string(run.seed), predictor,
                            fmt_full(value), std::to_string(run.n_scored),
                            std::to_string(run.n_failed)});
        }
    }
    write_csv_file(path.string(), {"run", "seed", "predictor", "metric", "n_scored", "n_failed"},
                   rows);
}

void write_predictions_csv(const RunResult& run, const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& record : run.records) {
        rows.push_back({record.case_id, record.predictor, fmt_full(record.predicted),
                        fmt_full(record.actual), record.family_tag, record.reasoning});
    }
    write_csv_file(path.string(),
                   {"case_id", "predictor", "predicted", "actual", "beta_family", "reasoning"},
                   rows);
}

Json manifest_json(const ExperimentReport& report) {
    Json manifest = Json::object();
    manifest["name"] = report.config.name;
    manifest["config"] = config_to_json(report.config);
    manifest["config_digest"] = report.config_digest;
    manifest["cache_digest"] = report.cache_digest;
    manifest["log_digest"] = report.log_digest;
    manifest["t_split"] = report.t_split;
    manifest["train_size"] = report.train_size;
    manifest["test_size"] = report.test_size;
    manifest["skipped_cases"] = report.skipped_cases;
    manifest["seeds"] = Json::array();
    manifest["n_failed"] = Json::array();
    for (const auto& run : report.runs) {
        manifest["seeds"].push_back(run.seed);
        manifest["n_failed"].push_back(run.n_failed);
    }
    manifest["all_df"] = Json::object();
    for (const auto& name : report.predictor_order) {
        auto it = report.summaries.find(name);
        if (it != report.summaries.end() && it->second.all_df) {
            manifest["all_df"][name] = *it->second.all_df;
        }
    }
    manifest["convergence"] = Json::array();
    for (const auto& [n, d] : report.convergence) {
        manifest["convergence"].push_back(Json::array({n, d}));
    }
    return manifest;
}

}  // namespace

void render_report(const ExperimentReport& report, const std::string& out_dir) {
    fs::path dir(out_dir);
    fs::create_directories(dir);

    {
        std::ofstream out(dir / "manifest.json", std::ios::binary);
        if (!out) raise(ErrorKind::Io, "cannot write manifest under '", out_dir, "'");
        out << manifest_json(report).dump(2) << "\n";
    }
    for (std::size_t r = 0; r < report.runs.size(); ++r) {
        fs::path run_dir = dir / "runs" / ("run_" + std::to_string(r + 1));
        fs::create_directories(run_dir);
        write_predictions_csv(report.runs[r], run_dir / "predictions.csv");
    }
    write_per_run_csv(report, dir / "per_run_metrics.csv");
    write_markdown(report, dir / "report.md");
    write_metric_csv(report, dir / "report_metrics.csv");
    write_tests_csv(report, dir / "report_tests.csv");
    write_good_turing_csv(report, dir / "good_turing.csv");
    write_convergence_csv(report, dir / "convergence.csv");
}

ExperimentReport rebuild_report(const std::string& out_dir) {
    fs::path dir(out_dir);
    std::ifstream in(dir / "manifest.json", std::ios::binary);
    if (!in) raise(ErrorKind::Io, "no manifest.json under '", out_dir, "'");
    Json manifest = Json::parse(in);

    ExperimentConfig config = config_from_json(manifest["config"]);
    KpiKind kpi = config.schema.kpi;

    ReportContext context;
    context.cache_digest = manifest.value("cache_digest", std::string());
    context.log_digest = manifest.value("log_digest", std::string());
    context.t_split = manifest["t_split"].get<Minutes>();
    context.train_size = manifest["train_size"].get<std::size_t>();
    context.test_size = manifest["test_size"].get<std::size_t>();
    context.skipped_cases = manifest["skipped_cases"].get<std::size_t>();
    for (const auto& [name, value] : manifest["all_df"].items()) {
        context.all_df[name] = value.get<double>();
    }
    for (const auto& point : manifest["convergence"]) {
        context.convergence.emplace_back(point[0].get<std::size_t>(), point[1].get<double>());
    }

    auto seeds = manifest["seeds"].get<std::vector<std::uint64_t>>();
    auto learner_specs = config.effective_learners();

    std::vector<RunResult> runs;
    for (std::size_t r = 0; r < seeds.size(); ++r) {
        fs::path pred_path = dir / "runs" / ("run_" + std::to_string(r + 1)) / "predictions.csv";
        CsvTable table = read_csv_file(pred_path.string());
        int col_case = table.column("case_id");
        int col_predictor = table.column("predictor");
        int col_predicted = table.column("predicted");
        int col_actual = table.column("actual");
        int col_family = table.column("beta_family");
        int col_reasoning = table.column("reasoning");
        if (col_case < 0 || col_predictor < 0 || col_predicted < 0 || col_actual < 0) {
            raise(ErrorKind::Schema, pred_path.string(), ": unexpected prediction columns");
        }

        RunResult run;
        run.seed = seeds[r];
        if (r < manifest["n_failed"].size()) {
            run.n_failed = manifest["n_failed"][r].get<std::size_t>();
        }
        std::map<std::string, std::vector<std::pair<double, double>>> pairs_by_predictor;
        std::vector<std::string> case_order;
        for (const auto& row : table.rows) {
            PredictionRecord record;
            record.case_id = row[col_case];
            record.predictor = row[col_predictor];
            record.predicted = std::stod(row[col_predicted]);
            record.actual = std::stod(row[col_actual]);
            if (col_family >= 0) record.family_tag = row[col_family];
            if (col_reasoning >= 0) record.reasoning = row[col_reasoning];
            if (record.predictor == "llm") case_order.push_back(record.case_id);
            pairs_by_predictor[record.predictor].emplace_back(record.actual, record.predicted);
            run.records.push_back(std::move(record));
        }
        run.n_scored = case_order.size();
        for (const auto& [predictor, pairs] : pairs_by_predictor) {
            run.metric_by_predictor[predictor] = metric_of_pairs(pairs, kpi);
        }

        std::vector<std::string> contenders = {"llm"};
        for (const auto& spec : learner_specs) contenders.push_back(spec.id());
        std::size_t window = config.best_window == 0
                                 ? run.n_scored
                                 : std::min(config.best_window, run.n_scored);
        for (std::size_t i = 0; i < window; ++i) {
            const std::string* winner = nullptr;
            double best_err = 0;
            for (const auto& name : contenders) {
                auto it = pairs_by_predictor.find(name);
                if (it == pairs_by_predictor.end() || i >= it->second.size()) continue;
                double err = std::fabs(it->second[i].first - it->second[i].second);
                if (!winner || err < best_err) {
                    winner = &name;
                    best_err = err;
                }
            }
            if (winner) run.best_counts[*winner] += 1;
        }
        runs.push_back(std::move(run));
    }

    return aggregate_runs(config, std::move(runs), std::move(context));
}

}  // namespace ppm
