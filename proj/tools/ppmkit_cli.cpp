// Command-line front end for the predictive-process-monitoring toolkit.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ppmkit/anonymizer.hpp"
#include "ppmkit/csv.hpp"
#include "ppmkit/experiment.hpp"
#include "ppmkit/prompt_engine.hpp"
#include "ppmkit/split_sampler.hpp"
#include "ppmkit/stats_eval.hpp"
#include "ppmkit/trace_encoding.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ppm;

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::string out;
};

ExperimentConfig load(const GlobalOptions& options) {
    if (options.config_path.empty()) {
        raise(ErrorKind::Config, "--config is required for this subcommand");
    }
    ExperimentConfig config = load_config(options.config_path);
    if (options.seed) {
        config.base_seed = *options.seed;
        config.seeds.clear();
    }
    if (options.mode) config.mode = parse_llm_mode(*options.mode);
    if (!options.out.empty()) config.output_dir = options.out;
    return config;
}

std::string fmt(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

void write_prediction_records(const std::vector<PredictionRecord>& records,
                              const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& record : records) {
        rows.push_back({record.case_id, record.predictor, fmt(record.predicted),
                        fmt(record.actual), record.family_tag, record.reasoning});
    }
    write_csv_file(path, {"case_id", "predictor", "predicted", "actual", "beta_family", "reasoning"},
                   rows);
}

int cmd_split(const GlobalOptions& options) {
    ExperimentConfig config = load(options);
    EventLog log = load_csv(config.log_path, config.schema);
    Minutes t_split = compute_t_split(log, config.split_fraction);
    SplitResult split = temporal_split(log, t_split);

    std::string out = config.output_dir.empty() ? "split_manifest.csv"
                                                : (fs::path(config.output_dir) / "split_manifest.csv").string();
    if (!config.output_dir.empty()) fs::create_directories(config.output_dir);
    write_split_manifest(split, out);
    std::cout << "t_split=" << t_split << " train=" << split.train.size() << " test="
              << split.test_truncated.size() << " skipped=" << split.skipped_cases.size()
              << "\nmanifest: " << out << "\n";
    return 0;
}

int cmd_encode(const GlobalOptions& options, const std::string& kind, bool running) {
    ExperimentConfig config = load(options);
    EventLog log = load_csv(config.log_path, config.schema);
    Minutes t_split = compute_t_split(log, config.split_fraction);
    SplitResult split = temporal_split(log, t_split);
    const EventLog& source = running ? split.test_truncated : split.train;

    if (kind == "seq") {
        std::ostream* out = &std::cout;
        std::ofstream file;
        if (!options.out.empty()) {
            file.open(options.out, std::ios::binary);
            if (!file) raise(ErrorKind::Io, "cannot write '", options.out, "'");
            out = &file;
        }
        for (const auto& trace : source.traces) {
            *out << encode_seq(trace, config.schema, running).payload << "\n";
        }
        return 0;
    }
    if (kind == "aggr") {
        auto alphabet = split.train.activity_alphabet();
        std::vector<EncodedInstance> instances;
        for (const auto& trace : source.traces) {
            instances.push_back(encode_aggr(trace, config.schema, alphabet, running));
        }
        std::string out = options.out.empty() ? "encoded_aggr.csv" : options.out;
        write_aggregated_csv(instances, out);
        std::cout << "wrote " << instances.size() << " rows to " << out << "\n";
        return 0;
    }
    raise(ErrorKind::Config, "unknown encoding kind '", kind, "' (expected seq|aggr)");
}

int cmd_anonymize(const GlobalOptions& options, const std::string& salt,
                  const std::string& prompt_path) {
    ExperimentConfig config = load(options);
    EventLog log = load_csv(config.log_path, config.schema);
    ContextSet context = build_context_set(log, config.schema);
    HashMapping mapping = build_mapping(context, salt.empty() ? std::to_string(config.base_seed)
                                                              : salt);
    if (!prompt_path.empty()) {
        std::ifstream in(prompt_path, std::ios::binary);
        if (!in) raise(ErrorKind::Io, "cannot open '", prompt_path, "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        std::cout << anonymize(buf.str(), mapping);
        return 0;
    }
    std::string out = options.out.empty() ? "hash_mapping.csv" : options.out;
    write_mapping_csv(mapping, out);
    std::cout << "wrote " << mapping.entries.size() << " tokens to " << out << "\n";
    return 0;
}

int cmd_predict_llm(const GlobalOptions& options) {
    ExperimentConfig config = load(options);
    config.repetitions = 1;
    config.seeds = {config.base_seed};
    config.output_dir.clear();  // --out names the prediction CSV, not a report directory
    ExperimentReport report = run_experiment(config);

    std::vector<PredictionRecord> records;
    for (const auto& record : report.runs.front().records) {
        if (record.predictor == "llm" || record.predictor == "llm_hashed") {
            records.push_back(record);
        }
    }
    std::string out = options.out.empty() ? "llm_predictions.csv" : options.out;
    write_prediction_records(records, out);
    std::cout << "wrote " << records.size() << " predictions to " << out << "\n";
    return 0;
}

int cmd_predict_beta(const GlobalOptions& options, const std::string& family,
                     const std::string& aggregation, int k) {
    ExperimentConfig config = load(options);
    BetaLearnerSpec spec;
    spec.family = parse_family(family);
    spec.aggregation = aggregation.empty() ? Aggregation::None : parse_aggregation(aggregation);
    if (k > 0) spec.k = k;
    spec.validate();

    EventLog log = load_csv(config.log_path, config.schema);
    Minutes t_split = compute_t_split(log, config.split_fraction);
    SplitResult split = temporal_split(log, t_split);
    EventLog sample = config.n_train < split.train.size()
                          ? sample_training(split.train, config.n_train, config.base_seed)
                          : split.train;
    FittedLearner fitted = fit(spec, sample, config.schema);

    std::map<std::string, double> ground_truth;
    for (const auto& trace : split.test_completed.traces) {
        ground_truth[trace.case_id] = kpi_as_double(kpi_value(trace, config.schema));
    }
    std::vector<PredictionRecord> records;
    for (const auto& prefix : split.test_truncated.traces) {
        PredictionRecord record;
        record.case_id = prefix.case_id;
        record.predictor = spec.id();
        record.predicted = config.schema.kpi == KpiKind::TotalTime
                               ? predict_total_time(fitted, prefix)
                               : (predict_occurrence(fitted, prefix,
                                                     *config.schema.target_activity)
                                      ? 1.0
                                      : 0.0);
        record.actual = ground_truth.at(prefix.case_id);
        records.push_back(std::move(record));
    }
    std::string out = options.out.empty() ? "beta_predictions.csv" : options.out;
    write_prediction_records(records, out);
    std::cout << "wrote " << records.size() << " predictions to " << out << "\n";
    return 0;
}

int cmd_evaluate(const GlobalOptions& options, const std::string& pred_path) {
    ExperimentConfig config = load(options);
    CsvTable table = read_csv_file(pred_path);
    int col_predictor = table.column("predictor");
    int col_predicted = table.column("predicted");
    int col_actual = table.column("actual");
    if (col_predictor < 0 || col_predicted < 0 || col_actual < 0) {
        raise(ErrorKind::Schema, pred_path, ": expected predictor/predicted/actual columns");
    }
    std::map<std::string, std::vector<std::pair<double, double>>> by_predictor;
    for (const auto& row : table.rows) {
        by_predictor[row[col_predictor]].emplace_back(std::stod(row[col_actual]),
                                                      std::stod(row[col_predicted]));
    }
    bool regression = config.schema.kpi == KpiKind::TotalTime;
    std::vector<std::vector<std::string>> rows;
    for (const auto& [predictor, pairs] : by_predictor) {
        double value = metric_of_pairs(pairs, config.schema.kpi);
        rows.push_back({predictor, regression ? "mae" : "f1", fmt(value),
                        std::to_string(pairs.size())});
        std::cout << predictor << ": " << (regression ? "mae" : "f1") << " = " << fmt(value)
                  << " over " << pairs.size() << " instances\n";
    }
    if (!options.out.empty()) {
        write_csv_file(options.out, {"predictor", "metric", "value", "n"}, rows);
    }
    return 0;
}

std::vector<std::pair<double, double>> read_joined_errors(const std::string& a_path,
                                                          const std::string& b_path) {
    auto read = [](const std::string& path) {
        CsvTable table = read_csv_file(path);
        int col_case = table.column("case_id");
        int col_predicted = table.column("predicted");
        int col_actual = table.column("actual");
        if (col_case < 0 || col_predicted < 0 || col_actual < 0) {
            raise(ErrorKind::Schema, path, ": expected case_id/predicted/actual columns");
        }
        std::map<std::string, double> errors;
        for (const auto& row : table.rows) {
            errors[row[col_case]] =
                std::fabs(std::stod(row[col_actual]) - std::stod(row[col_predicted]));
        }
        return errors;
    };
    auto a = read(a_path);
    auto b = read(b_path);
    std::vector<std::pair<double, double>> joined;
    for (const auto& [case_id, err_a] : a) {
        auto it = b.find(case_id);
        if (it != b.end()) joined.emplace_back(err_a, it->second);
    }
    if (joined.empty()) raise(ErrorKind::InvalidArgument, "prediction files share no case ids");
    return joined;
}

int cmd_stats(const std::string& test, const std::string& a_path, const std::string& b_path,
              const std::string& scores_path, double alpha) {
    if (test == "wilcoxon") {
        auto joined = read_joined_errors(a_path, b_path);
        std::vector<double> a, b;
        for (const auto& [err_a, err_b] : joined) {
            a.push_back(err_a);
            b.push_back(err_b);
        }
        TestResult result = wilcoxon_signed_rank(a, b, alpha);
        std::cout << result.test << ": statistic=" << fmt(result.statistic)
                  << " p=" << fmt(result.p_value) << " -> "
                  << (result.decision == Decision::Reject ? "reject" : "retain") << " ("
                  << result.note << ", n=" << joined.size() << " joined cases)\n";
        return 0;
    }
    if (test == "friedman") {
        CsvTable table = read_csv_file(scores_path);
        std::vector<std::vector<double>> scores;
        for (const auto& row : table.rows) {
            std::vector<double> block;
            for (const auto& cell : row) block.push_back(std::stod(cell));
            scores.push_back(std::move(block));
        }
        TestResult result = friedman_nemenyi(scores, alpha);
        std::cout << result.test << ": chi2=" << fmt(result.statistic)
                  << " p=" << fmt(result.p_value) << " CD=" << fmt(result.critical_difference)
                  << " -> " << (result.decision == Decision::Reject ? "reject" : "retain") << "\n";
        std::cout << "avg ranks:";
        for (std::size_t j = 0; j < result.avg_ranks.size(); ++j) {
            std::cout << " " << table.header[j] << "=" << fmt(result.avg_ranks[j]);
        }
        std::cout << "\n";
        // pairwise_p holds "p < bound" levels, so a bound of 0.01 means **.
        auto bound_stars = [](double bound) {
            if (bound <= 0.001) return "***";
            if (bound <= 0.01) return "**";
            if (bound <= 0.05) return "*";
            return "ns";
        };
        for (std::size_t i = 0; i < result.avg_ranks.size(); ++i) {
            for (std::size_t j = i + 1; j < result.avg_ranks.size(); ++j) {
                std::cout << table.header[i] << " vs " << table.header[j] << ": "
                          << (result.pairwise_reject[i][j] ? "reject " : "retain ")
                          << bound_stars(result.pairwise_p[i][j]) << "\n";
            }
        }
        return 0;
    }
    raise(ErrorKind::Config, "unknown test '", test, "' (expected wilcoxon|friedman)");
}

int cmd_good_turing(const std::string& annotations_path, const std::string& m_list,
                    const std::string& out) {
    CsvTable table = read_csv_file(annotations_path);
    // Accepts both annotation sidecars (family) and prediction CSVs
    // (beta_family).
    int col_family = table.column("family");
    if (col_family < 0) col_family = table.column("beta_family");
    if (col_family < 0) raise(ErrorKind::Schema, annotations_path, ": missing 'family' column");
    std::map<std::string, std::size_t> counts;
    for (const auto& row : table.rows) {
        if (!row[col_family].empty() && row[col_family] != "untagged") {
            counts[row[col_family]] += 1;
        }
    }
    GoodTuringEstimate gt = good_turing(counts);

    std::vector<double> ms;
    std::stringstream ss(m_list);
    std::string token;
    while (std::getline(ss, token, ',')) ms.push_back(std::stod(token));

    std::cout << "N=" << gt.total << " N1="
              << (gt.freq_of_freq.count(1) ? gt.freq_of_freq.at(1) : 0) << " p0=" << fmt(gt.p0)
              << "\nExpected Novel β-Learners: ";
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "m=%g: %.3f", ms[i], gt.expected_novel(ms[i]));
        std::cout << buf << (i + 1 < ms.size() ? ", " : "\n");
        rows.push_back({fmt(ms[i]), fmt(gt.expected_novel(ms[i]))});
    }
    if (!out.empty()) write_csv_file(out, {"m", "expected_novel"}, rows);
    return 0;
}

int cmd_convergence(const GlobalOptions& options, const std::string& grid_list) {
    ExperimentConfig config = load(options);
    EventLog log = load_csv(config.log_path, config.schema);

    std::vector<std::size_t> grid;
    if (!grid_list.empty()) {
        std::stringstream ss(grid_list);
        std::string token;
        while (std::getline(ss, token, ',')) grid.push_back(std::stoul(token));
    } else if (!config.convergence_grid.empty()) {
        grid = config.convergence_grid;
    } else {
        for (std::size_t n = 10; n < log.size(); n += 10) grid.push_back(n);
        grid.push_back(log.size());
    }
    auto curve = convergence_curve(log, config.schema, grid, config.base_seed);

    std::vector<std::vector<std::string>> rows;
    for (const auto& [n, d] : curve) {
        rows.push_back({std::to_string(n), fmt(d)});
        std::cout << n << "\t" << fmt(d) << "\n";
    }
    if (!options.out.empty()) write_csv_file(options.out, {"n", "distance"}, rows);
    return 0;
}

int cmd_run(const GlobalOptions& options) {
    ExperimentConfig config = load(options);
    ExperimentReport report = run_experiment(config);
    render_report(report, config.output_dir);
    std::cout << "report written to " << config.output_dir << "\n";
    return 0;
}

int cmd_report(const std::string& in_dir, const std::string& format) {
    ExperimentReport report = rebuild_report(in_dir);
    if (format != "markdown" && format != "csv") {
        raise(ErrorKind::Config, "unknown format '", format, "' (expected markdown|csv)");
    }
    render_report(report, in_dir);
    std::cout << "report rebuilt under " << in_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predictive-process-monitoring experimentation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions options;
    app.add_option("--config", options.config_path, "Experiment config (TOML)");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Override the base seed");
    std::string mode_value;
    auto* mode_opt = app.add_option("--mode", mode_value, "LLM mode: live|record|replay");
    app.add_option("--out", options.out, "Output file or directory");

    auto* split = app.add_subcommand("split", "Temporal split and audit manifest");

    auto* encode = app.add_subcommand("encode", "Encode traces (sequential or aggregated)");
    std::string encode_kind = "seq";
    bool encode_running = false;
    encode->add_option("--kind", encode_kind, "seq|aggr");
    encode->add_flag("--running", encode_running, "Encode test prefixes as running instances");

    auto* anonymize_cmd = app.add_subcommand("anonymize", "Token hashing: mapping export or prompt anonymization");
    std::string salt, prompt_path;
    anonymize_cmd->add_option("--salt", salt, "Mapping salt (default: base seed)");
    anonymize_cmd->add_option("--prompt", prompt_path, "Anonymize this prompt file to stdout");

    auto* predict_llm = app.add_subcommand("predict-llm", "One repetition of LLM predictions");

    auto* predict_beta = app.add_subcommand("predict-beta", "Predictions of one beta learner");
    std::string family, aggregation;
    int k = 0;
    predict_beta->add_option("--family", family, "Learner family")->required();
    predict_beta->add_option("--agg", aggregation, "mean|median|mode (regression families)");
    predict_beta->add_option("--k", k, "Neighbour count (default min(10, |train|))");

    auto* evaluate = app.add_subcommand("evaluate", "Score a PredictionRecord CSV");
    std::string pred_path;
    evaluate->add_option("--pred", pred_path, "Prediction CSV")->required();

    auto* stats = app.add_subcommand("stats", "Statistical tests on prediction files");
    std::string test = "wilcoxon", a_path, b_path, scores_path;
    double alpha = 0.05;
    stats->add_option("--test", test, "wilcoxon|friedman");
    stats->add_option("--a", a_path, "First prediction CSV (wilcoxon)");
    stats->add_option("--b", b_path, "Second prediction CSV (wilcoxon)");
    stats->add_option("--scores", scores_path, "Blocks x groups score CSV (friedman)");
    stats->add_option("--alpha", alpha, "Significance level");

    auto* good_turing_cmd = app.add_subcommand("good-turing", "Novel-family discovery estimate");
    std::string annotations, m_list = "1,10,100";
    good_turing_cmd->add_option("--annotations", annotations, "Sidecar CSV (case_id, family)")
        ->required();
    good_turing_cmd->add_option("--m", m_list, "Comma-separated m values");

    auto* convergence_cmd = app.add_subcommand("convergence", "KPI distribution convergence curve");
    std::string grid_list;
    convergence_cmd->add_option("--grid", grid_list, "Comma-separated sample sizes");

    auto* run = app.add_subcommand("run", "Full experiment: sample, predict, score, report");

    auto* report_cmd = app.add_subcommand("report", "Re-render a report from stored run data");
    std::string in_dir, format = "markdown";
    report_cmd->add_option("--in", in_dir, "Report directory")->required();
    report_cmd->add_option("--format", format, "markdown|csv");

    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) options.seed = seed_value;
    if (*mode_opt) options.mode = mode_value;

    try {
        if (*split) return cmd_split(options);
        if (*encode) return cmd_encode(options, encode_kind, encode_running);
        if (*anonymize_cmd) return cmd_anonymize(options, salt, prompt_path);
        if (*predict_llm) return cmd_predict_llm(options);
        if (*predict_beta) return cmd_predict_beta(options, family, aggregation, k);
        if (*evaluate) return cmd_evaluate(options, pred_path);
        if (*stats) return cmd_stats(test, a_path, b_path, scores_path, alpha);
        if (*good_turing_cmd) return cmd_good_turing(annotations, m_list, options.out);
        if (*convergence_cmd) return cmd_convergence(options, grid_list);
        if (*run) return cmd_run(options);
        if (*report_cmd) return cmd_report(in_dir, format);
    } catch (const ppm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
