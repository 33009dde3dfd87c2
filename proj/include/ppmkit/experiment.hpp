#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppmkit/beta_learners.hpp"
#include "ppmkit/event_log.hpp"
#include "ppmkit/llm_gateway.hpp"
#include "ppmkit/stats_eval.hpp"

namespace ppm {

/// Prediction files of an externally trained benchmark model. The harness
/// never trains these models; it only scores their predictions.
struct ExternalPrediction {
    std::string name;
    /// CSV (case_id, predicted) from the model trained on the full log.
    std::string all_df_path;
    /// Optional per-run CSVs from scarce-data trainings, one per repetition.
    std::vector<std::string> run_paths;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::string log_path;
    LogSchema schema;

    std::size_t n_train = 100;
    std::size_t repetitions = 20;
    std::vector<std::uint64_t> seeds;  // when empty: base_seed, base_seed+1, ...
    std::uint64_t base_seed = 1;
    double split_fraction = 0.8;
    double validation_fraction = 0.1;  // 0 disables the validation carve-out
    /// Also run the hashed-prompt arm and compare it against the plain arm.
    bool hashed = false;

    LlmEndpointConfig llm;
    LlmMode mode = LlmMode::Replay;
    std::string cache_dir;

    std::vector<BetaLearnerSpec> learners;  // empty -> default_learners(kpi)
    std::vector<ExternalPrediction> external_predictions;

    std::string output_dir = "out";
    std::size_t prompt_char_budget = 0;  // 0 = unlimited
    /// #best counts over the first N scored instances per run (0 = all).
    std::size_t best_window = 0;
    std::string annotations_path;  // manual tag overrides (case_id, family)
    std::vector<std::size_t> convergence_grid;  // empty -> derived from log size
    std::vector<double> good_turing_m = {1, 10, 100};

    std::vector<std::uint64_t> effective_seeds() const;
    std::vector<BetaLearnerSpec> effective_learners() const;
    void validate() const;
};

/// Loads a config from the TOML subset. Unknown keys anywhere are hard
/// errors: a silently ignored typo would corrupt an experiment.
ExperimentConfig load_config(const std::string& path);

nlohmann::ordered_json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::ordered_json& json);

/// Digest of the canonical JSON form (independent of TOML formatting).
std::string config_digest(const ExperimentConfig& config);

struct PredictionRecord {
    std::string case_id;
    std::string predictor;  // "llm", "llm_hashed", a learner id, or an external name
    double predicted = 0;   // occurrence mapped to 1/0
    double actual = 0;
    std::string reasoning;   // LLM rows only
    std::string family_tag;  // tagger output (LLM rows), "untagged" when unmatched
};

struct RunResult {
    std::uint64_t seed = 0;
    std::size_t n_scored = 0;
    std::size_t n_failed = 0;  // LLM instances dropped after retries
    std::vector<PredictionRecord> records;
    std::map<std::string, double> metric_by_predictor;
    std::map<std::string, std::size_t> best_counts;
};

struct PredictorSummary {
    bool has_runs = false;  // false for benchmarks ingested as all_df only
    double mean = 0;
    double stddev = 0;  // sample standard deviation over runs
    std::optional<double> all_df;
    std::size_t best_total = 0;
    std::string significance = "-";
    std::optional<std::size_t> occurrence;
    std::string delta_llm = "-";
};

struct ExperimentReport {
    ExperimentConfig config;
    std::string config_digest;
    std::string cache_digest;
    std::string log_digest;

    Minutes t_split = 0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::size_t skipped_cases = 0;

    std::vector<RunResult> runs;
    std::vector<std::string> predictor_order;
    std::map<std::string, PredictorSummary> summaries;
    std::map<std::string, TestResult> wilcoxon_vs_llm;
    std::optional<TestResult> hash_comparison;
    std::optional<GoodTuringEstimate> gt;
    std::map<std::string, std::size_t> family_occurrence;
    std::vector<std::pair<std::size_t, double>> convergence;
};

/// The experiment's scalar metric over (actual, predicted) pairs: MAE for
/// total time, F1 for activity occurrence (values >= 0.5 read as true).
double metric_of_pairs(const std::vector<std::pair<double, double>>& pairs, KpiKind kpi);

/// Provenance and split facts carried alongside the per-run results.
struct ReportContext {
    std::string cache_digest;
    std::string log_digest;
    Minutes t_split = 0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::size_t skipped_cases = 0;
    std::map<std::string, double> all_df;
    std::vector<std::pair<std::size_t, double>> convergence;
};

/// Aggregation step shared by run_experiment and rebuild_report: summaries,
/// Wilcoxon per learner vs the LLM, the hashed-vs-plain comparison,
/// Good-Turing over tagged families, and the delta-when-occurring columns.
ExperimentReport aggregate_runs(const ExperimentConfig& config, std::vector<RunResult> runs,
                                ReportContext context);

/// Runs the full pipeline: per repetition, sample training traces, fit the
/// learners, prompt the client for every running prefix (plain and, when
/// configured, hashed), score everything against the completed test traces,
/// tag the reasoning texts; afterwards aggregate, test, and estimate.
/// Prompts and replies are persisted under output_dir when it is non-empty.
ExperimentReport run_experiment(const ExperimentConfig& config, LlmClient& client);

/// Builds the client from config.mode first.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Writes manifest.json, per-run prediction CSVs, the metric/test tables
/// as Markdown and CSV, the Good-Turing table, and the convergence curve.
void render_report(const ExperimentReport& report, const std::string& out_dir);

/// Rebuilds a report from manifest.json and the stored per-run prediction
/// CSVs, recomputing every aggregate.
ExperimentReport rebuild_report(const std::string& out_dir);

/// Reply generator that echoes a beta learner: it decodes the training and
/// running instances out of the prompt itself, fits the learner, and
/// renders a reply in the expected marker format. Useful as a fully
/// offline, deterministic LLM stand-in.
ScriptedLlmClient::Generator make_beta_echo_generator(const BetaLearnerSpec& spec,
                                                      const LogSchema& schema);

}  // namespace ppm
