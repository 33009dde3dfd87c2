#include "ppmkit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ppmkit/anonymizer.hpp"
#include "ppmkit/csv.hpp"
#include "ppmkit/prompt_engine.hpp"
#include "ppmkit/sha256.hpp"
#include "ppmkit/split_sampler.hpp"
#include "ppmkit/toml_lite.hpp"
#include "ppmkit/trace_encoding.hpp"

namespace ppm {

namespace {

using Json = nlohmann::ordered_json;

constexpr int kParseRetries = 3;

void check_keys(const Json& object, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (const auto& [key, value] : object.items()) {
        bool known = false;
        for (const char* name : allowed) {
            if (key == name) {
                known = true;
                break;
            }
        }
        if (!known) raise(ErrorKind::Config, where, ": unknown key '", key, "'");
    }
}

KpiKind parse_kpi(const std::string& text) {
    if (text == "total_time") return KpiKind::TotalTime;
    if (text == "activity_occurrence") return KpiKind::ActivityOccurrence;
    raise(ErrorKind::Config, "unknown kpi '", text, "' (expected total_time|activity_occurrence)");
}

AttrType parse_attr_type(const std::string& text) {
    if (text == "numeric") return AttrType::Numeric;
    if (text == "categorical") return AttrType::Categorical;
    raise(ErrorKind::Config, "unknown attribute type '", text, "'");
}

AttrScope parse_attr_scope(const std::string& text) {
    if (text == "global") return AttrScope::Global;
    if (text == "local") return AttrScope::Local;
    raise(ErrorKind::Config, "unknown attribute scope '", text, "'");
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

}  // namespace

double metric_of_pairs(const std::vector<std::pair<double, double>>& pairs, KpiKind kpi) {
    if (kpi == KpiKind::TotalTime) return mae(pairs).value;
    std::vector<std::pair<bool, bool>> labels;
    labels.reserve(pairs.size());
    for (const auto& [actual, predicted] : pairs) {
        labels.emplace_back(actual >= 0.5, predicted >= 0.5);
    }
    return f1(labels).value;
}

std::vector<std::uint64_t> ExperimentConfig::effective_seeds() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out;
    out.reserve(repetitions);
    for (std::size_t i = 0; i < repetitions; ++i) out.push_back(base_seed + i);
    return out;
}

std::vector<BetaLearnerSpec> ExperimentConfig::effective_learners() const {
    if (!learners.empty()) return learners;
    return default_learners(schema.kpi);
}

void ExperimentConfig::validate() const {
    schema.validate();
    if (log_path.empty()) raise(ErrorKind::Config, "log_path is required");
    if (n_train == 0) raise(ErrorKind::Config, "n_train must be positive");
    if (repetitions == 0) raise(ErrorKind::Config, "repetitions must be positive");
    if (!seeds.empty() && seeds.size() != repetitions) {
        raise(ErrorKind::Config, "seeds lists ", seeds.size(), " entries but repetitions is ",
              repetitions);
    }
    if (!(split_fraction > 0.0) || split_fraction > 1.0) {
        raise(ErrorKind::Config, "split_fraction must be in (0, 1]");
    }
    if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
        raise(ErrorKind::Config, "validation_fraction must be in [0, 1)");
    }
    for (const auto& spec : effective_learners()) spec.validate();
    bool regression = schema.kpi == KpiKind::TotalTime;
    for (const auto& spec : effective_learners()) {
        if (is_regression(spec.family) != regression) {
            raise(ErrorKind::Config, "learner '", spec.id(), "' does not fit kpi '",
                  regression ? "total_time" : "activity_occurrence", "'");
        }
    }
}

ExperimentConfig load_config(const std::string& path) {
    return config_from_json(parse_toml_file(path));
}

Json config_to_json(const ExperimentConfig& config) {
    Json experiment = Json::object();
    experiment["name"] = config.name;
    experiment["log_path"] = config.log_path;
    experiment["kpi"] = config.schema.kpi == KpiKind::TotalTime ? "total_time"
                                                                : "activity_occurrence";
    if (config.schema.target_activity) {
        experiment["target_activity"] = *config.schema.target_activity;
    }
    experiment["n_train"] = config.n_train;
    experiment["repetitions"] = config.repetitions;
    if (!config.seeds.empty()) experiment["seeds"] = config.seeds;
    experiment["base_seed"] = config.base_seed;
    experiment["split_fraction"] = config.split_fraction;
    experiment["validation_fraction"] = config.validation_fraction;
    experiment["hashed"] = config.hashed;
    experiment["output_dir"] = config.output_dir;
    experiment["prompt_char_budget"] = config.prompt_char_budget;
    experiment["best_window"] = config.best_window;
    if (!config.annotations_path.empty()) experiment["annotations"] = config.annotations_path;
    if (!config.convergence_grid.empty()) experiment["convergence_grid"] = config.convergence_grid;
    experiment["good_turing_m"] = config.good_turing_m;

    Json schema = Json::object();
    if (!config.schema.domain_background.empty()) {
        schema["domain_background"] = config.schema.domain_background;
    }
    schema["attributes"] = Json::array();
    for (const auto& attr : config.schema.attributes) {
        Json entry = Json::object();
        entry["name"] = attr.name;
        entry["type"] = attr.type == AttrType::Numeric ? "numeric" : "categorical";
        entry["scope"] = attr.scope == AttrScope::Global ? "global" : "local";
        if (!attr.description.empty()) entry["description"] = attr.description;
        schema["attributes"].push_back(entry);
    }

    Json llm = Json::object();
    llm["base_url"] = config.llm.base_url;
    llm["endpoint_path"] = config.llm.endpoint_path;
    llm["model_name"] = config.llm.model_name;
    llm["api_key_env"] = config.llm.api_key_env;
    llm["temperature"] = config.llm.temperature;
    llm["timeout_seconds"] = config.llm.timeout_seconds;
    llm["max_retries"] = config.llm.max_retries;
    llm["max_concurrency"] = config.llm.max_concurrency;
    llm["mode"] = to_string(config.mode);
    if (!config.cache_dir.empty()) llm["cache_dir"] = config.cache_dir;

    Json doc = Json::object();
    doc["experiment"] = experiment;
    doc["schema"] = schema;
    doc["llm"] = llm;
    if (!config.learners.empty()) {
        doc["learners"] = Json::array();
        for (const auto& spec : config.learners) {
            Json entry = Json::object();
            entry["family"] = to_string(spec.family);
            if (spec.aggregation != Aggregation::None) {
                entry["aggregation"] = to_string(spec.aggregation);
            }
            if (spec.k != 0) entry["k"] = spec.k;
            if (spec.mode_bin_minutes != 60.0) entry["mode_bin_minutes"] = spec.mode_bin_minutes;
            if (!spec.tie_predict_true) entry["tie_predict_true"] = false;
            doc["learners"].push_back(entry);
        }
    }
    if (!config.external_predictions.empty()) {
        doc["external_predictions"] = Json::array();
        for (const auto& external : config.external_predictions) {
            Json entry = Json::object();
            entry["name"] = external.name;
            if (!external.all_df_path.empty()) entry["all_df_path"] = external.all_df_path;
            if (!external.run_paths.empty()) entry["run_paths"] = external.run_paths;
            doc["external_predictions"].push_back(entry);
        }
    }
    return doc;
}

ExperimentConfig config_from_json(const Json& doc) {
    check_keys(doc, {"experiment", "schema", "llm", "learners", "external_predictions"}, "config");
    if (!doc.contains("experiment")) raise(ErrorKind::Config, "config: missing [experiment]");
    if (!doc.contains("schema")) raise(ErrorKind::Config, "config: missing [schema]");

    ExperimentConfig config;
    const Json& experiment = doc["experiment"];
    check_keys(experiment,
               {"name", "log_path", "kpi", "target_activity", "n_train", "repetitions", "seeds",
                "base_seed", "split_fraction", "validation_fraction", "hashed", "output_dir",
                "prompt_char_budget", "best_window", "annotations", "convergence_grid",
                "good_turing_m"},
               "[experiment]");
    if (experiment.contains("name")) config.name = experiment["name"].get<std::string>();
    if (experiment.contains("log_path")) config.log_path = experiment["log_path"].get<std::string>();
    if (experiment.contains("kpi")) config.schema.kpi = parse_kpi(experiment["kpi"].get<std::string>());
    if (experiment.contains("target_activity")) {
        config.schema.target_activity = experiment["target_activity"].get<std::string>();
    }
    if (experiment.contains("n_train")) config.n_train = experiment["n_train"].get<std::size_t>();
    if (experiment.contains("repetitions")) {
        config.repetitions = experiment["repetitions"].get<std::size_t>();
    }
    if (experiment.contains("seeds")) {
        config.seeds = experiment["seeds"].get<std::vector<std::uint64_t>>();
    }
    if (experiment.contains("base_seed")) {
        config.base_seed = experiment["base_seed"].get<std::uint64_t>();
    }
    if (experiment.contains("split_fraction")) {
        config.split_fraction = experiment["split_fraction"].get<double>();
    }
    if (experiment.contains("validation_fraction")) {
        config.validation_fraction = experiment["validation_fraction"].get<double>();
    }
    if (experiment.contains("hashed")) config.hashed = experiment["hashed"].get<bool>();
    if (experiment.contains("output_dir")) {
        config.output_dir = experiment["output_dir"].get<std::string>();
    }
    if (experiment.contains("prompt_char_budget")) {
        config.prompt_char_budget = experiment["prompt_char_budget"].get<std::size_t>();
    }
    if (experiment.contains("best_window")) {
        config.best_window = experiment["best_window"].get<std::size_t>();
    }
    if (experiment.contains("annotations")) {
        config.annotations_path = experiment["annotations"].get<std::string>();
    }
    if (experiment.contains("convergence_grid")) {
        config.convergence_grid = experiment["convergence_grid"].get<std::vector<std::size_t>>();
    }
    if (experiment.contains("good_turing_m")) {
        config.good_turing_m = experiment["good_turing_m"].get<std::vector<double>>();
    }

    const Json& schema = doc["schema"];
    check_keys(schema, {"domain_background", "attributes"}, "[schema]");
    if (schema.contains("domain_background")) {
        config.schema.domain_background = schema["domain_background"].get<std::string>();
    }
    if (schema.contains("attributes")) {
        for (const auto& entry : schema["attributes"]) {
            check_keys(entry, {"name", "type", "scope", "description"}, "[[schema.attributes]]");
            AttributeDecl attr;
            if (!entry.contains("name")) {
                raise(ErrorKind::Config, "[[schema.attributes]]: missing 'name'");
            }
            attr.name = entry["name"].get<std::string>();
            if (entry.contains("type")) attr.type = parse_attr_type(entry["type"].get<std::string>());
            if (entry.contains("scope")) {
                attr.scope = parse_attr_scope(entry["scope"].get<std::string>());
            }
            if (entry.contains("description")) {
                attr.description = entry["description"].get<std::string>();
            }
            config.schema.attributes.push_back(std::move(attr));
        }
    }

    if (doc.contains("llm")) {
        const Json& llm = doc["llm"];
        check_keys(llm,
                   {"base_url", "endpoint_path", "model_name", "api_key_env", "temperature",
                    "timeout_seconds", "max_retries", "max_concurrency", "mode", "cache_dir"},
                   "[llm]");
        if (llm.contains("base_url")) config.llm.base_url = llm["base_url"].get<std::string>();
        if (llm.contains("endpoint_path")) {
            config.llm.endpoint_path = llm["endpoint_path"].get<std::string>();
        }
        if (llm.contains("model_name")) config.llm.model_name = llm["model_name"].get<std::string>();
        if (llm.contains("api_key_env")) config.llm.api_key_env = llm["api_key_env"].get<std::string>();
        if (llm.contains("temperature")) config.llm.temperature = llm["temperature"].get<double>();
        if (llm.contains("timeout_seconds")) {
            config.llm.timeout_seconds = llm["timeout_seconds"].get<int>();
        }
        if (llm.contains("max_retries")) config.llm.max_retries = llm["max_retries"].get<int>();
        if (llm.contains("max_concurrency")) {
            config.llm.max_concurrency = llm["max_concurrency"].get<int>();
        }
        if (llm.contains("mode")) config.mode = parse_llm_mode(llm["mode"].get<std::string>());
        if (llm.contains("cache_dir")) config.cache_dir = llm["cache_dir"].get<std::string>();
    }

    if (doc.contains("learners")) {
        for (const auto& entry : doc["learners"]) {
            check_keys(entry, {"family", "aggregation", "k", "mode_bin_minutes", "tie_predict_true"},
                       "[[learners]]");
            BetaLearnerSpec spec;
            if (!entry.contains("family")) raise(ErrorKind::Config, "[[learners]]: missing 'family'");
            spec.family = parse_family(entry["family"].get<std::string>());
            if (entry.contains("aggregation")) {
                spec.aggregation = parse_aggregation(entry["aggregation"].get<std::string>());
            }
            if (entry.contains("k")) spec.k = entry["k"].get<int>();
            if (entry.contains("mode_bin_minutes")) {
                spec.mode_bin_minutes = entry["mode_bin_minutes"].get<double>();
            }
            if (entry.contains("tie_predict_true")) {
                spec.tie_predict_true = entry["tie_predict_true"].get<bool>();
            }
            config.learners.push_back(spec);
        }
    }

    if (doc.contains("external_predictions")) {
        for (const auto& entry : doc["external_predictions"]) {
            check_keys(entry, {"name", "all_df_path", "run_paths"}, "[[external_predictions]]");
            ExternalPrediction external;
            if (!entry.contains("name")) {
                raise(ErrorKind::Config, "[[external_predictions]]: missing 'name'");
            }
            external.name = entry["name"].get<std::string>();
            if (entry.contains("all_df_path")) {
                external.all_df_path = entry["all_df_path"].get<std::string>();
            }
            if (entry.contains("run_paths")) {
                external.run_paths = entry["run_paths"].get<std::vector<std::string>>();
            }
            config.external_predictions.push_back(std::move(external));
        }
    }

    config.validate();
    return config;
}

std::string config_digest(const ExperimentConfig& config) {
    return sha256_hex(config_to_json(config).dump(2));
}

// ---------------------------------------------------------------------------
// Beta-learner echo responder

namespace {

std::string echo_reasoning(const BetaLearnerSpec& spec, const std::string& rendered_value) {
    std::string family_text;
    switch (spec.family) {
        case BetaFamily::KnnAct:
        case BetaFamily::ActivityBased:
            family_text = "Comparing the sequence of activities with the training cases, I select "
                          "the nearest cases by activity counts.";
            break;
        case BetaFamily::KnnAtt:
        case BetaFamily::AttBased:
            family_text = "Filtering for similar characteristics, I keep training cases whose "
                          "attribute values lie in a range around the running case's.";
            break;
        case BetaFamily::TimeSeq:
            family_text = "I align the cumulative elapsed minutes of the running case with the "
                          "training cases and keep those with similar timing.";
            break;
        case BetaFamily::PathPred:
            family_text = "I look for training cases whose path extends the activities of the "
                          "running case.";
            break;
        case BetaFamily::StateBased:
            family_text = "Looking at the last activity of the running case, I check how often "
                          "the target follows it in the training cases.";
            break;
        case BetaFamily::PositiveEvidence:
            family_text = "I check whether the target activity already occurred in the running "
                          "case.";
            break;
    }
    std::string agg_text;
    switch (spec.aggregation) {
        case Aggregation::Median:
            agg_text = " The median of these total times is " + rendered_value + ". Median = " +
                       rendered_value + ".";
            break;
        case Aggregation::Mean:
            agg_text = " The average of these total times is " + rendered_value + ".";
            break;
        case Aggregation::Mode:
            agg_text = " The most common bin of these total times gives " + rendered_value + ".";
            break;
        case Aggregation::None:
            agg_text = " This yields " + rendered_value + ".";
            break;
    }
    return family_text + agg_text;
}

}  // namespace

ScriptedLlmClient::Generator make_beta_echo_generator(const BetaLearnerSpec& spec,
                                                      const LogSchema& schema) {
    return [spec, schema](const std::string& prompt) -> std::string {
        EventLog train;
        train.schema = schema;
        std::optional<Trace> running;

        std::istringstream lines(prompt);
        std::string line;
        while (std::getline(lines, line)) {
            if (line.rfind("     {", 0) == 0) {
                DecodedSequential decoded = decode_seq(std::string_view(line).substr(5));
                train.traces.push_back(trace_from_decoded(decoded, schema));
            } else if (line.rfind("    {", 0) == 0) {
                DecodedSequential decoded = decode_seq(std::string_view(line).substr(4));
                running = trace_from_decoded(decoded, schema);
            }
        }
        if (!running || train.empty()) {
            raise(ErrorKind::Parse, "echo responder found no encoded instances in the prompt");
        }

        FittedLearner learner = fit(spec, train, schema);
        std::string answer;
        std::string rendered;
        if (is_regression(spec.family)) {
            double value = predict_total_time(learner, *running);
            answer = std::to_string(std::llround(value));
            rendered = answer;
        } else {
            bool occurs = predict_occurrence(learner, *running, *schema.target_activity);
            answer = occurs ? "yes" : "no";
            rendered = answer;
        }
        return "[[ ## reasoning ## ]]\n" + echo_reasoning(spec, rendered) +
               "\n\n[[ ## answer ## ]]\n" + answer + "\n\n[[ ## completed ## ]]\n";
    };
}

// ---------------------------------------------------------------------------
// Runner

namespace {

std::map<std::string, double> read_prediction_file(const std::string& path) {
    CsvTable table = read_csv_file(path);
    int col_case = table.column("case_id");
    int col_pred = table.column("predicted");
    if (col_case < 0 || col_pred < 0) {
        raise(ErrorKind::Schema, path, ": expected header columns 'case_id' and 'predicted'");
    }
    std::map<std::string, double> out;
    for (const auto& row : table.rows) {
        out[row[col_case]] = std::stod(row[col_pred]);
    }
    return out;
}

std::vector<std::size_t> default_convergence_grid(std::size_t log_size) {
    std::vector<std::size_t> grid;
    for (std::size_t n : {std::size_t{10}, std::size_t{20}, std::size_t{30}, std::size_t{50},
                          std::size_t{75}, std::size_t{100}, std::size_t{150}, std::size_t{200},
                          std::size_t{300}, std::size_t{500}}) {
        if (n <= log_size) grid.push_back(n);
    }
    if (grid.empty() || grid.back() != log_size) grid.push_back(log_size);
    return grid;
}

struct LlmOutcome {
    bool ok = false;
    double predicted = 0;
    std::string reasoning;
    std::string reply;
    std::string prompt;
};

LlmOutcome ask_llm(LlmClient& client, const std::string& prompt, KpiKind kpi) {
    LlmOutcome outcome;
    outcome.prompt = prompt;
    for (int attempt = 0; attempt < kParseRetries; ++attempt) {
        std::string reply;
        try {
            reply = client.complete(prompt);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Http) {
                outcome.reply = e.what();
                continue;  // transient transport failure: retry, then give up
            }
            throw;  // cache misses and config errors are setup bugs
        }
        outcome.reply = reply;
        try {
            LlmResponse response = parse_response(reply, kpi);
            outcome.ok = true;
            outcome.reasoning = response.reasoning;
            outcome.predicted = kpi == KpiKind::TotalTime
                                    ? static_cast<double>(response.answer_minutes())
                                    : (response.answer_occurs() ? 1.0 : 0.0);
            return outcome;
        } catch (const Error&) {
            // Malformed reply: retry with the identical prompt.
        }
    }
    return outcome;
}

void persist_pair(const std::filesystem::path& dir, const std::string& case_id,
                  const std::string& prompt, const std::string& reply) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / (case_id + ".prompt.txt"), std::ios::binary);
        out << prompt;
    }
    {
        std::ofstream out(dir / (case_id + ".reply.txt"), std::ios::binary);
        out << reply;
    }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, LlmClient& client) {
    config.validate();
    EventLog full_log = load_csv(config.log_path, config.schema);
    if (full_log.empty()) raise(ErrorKind::InvalidArgument, "log '", config.log_path, "' is empty");

    Minutes t_split = compute_t_split(full_log, config.split_fraction);
    SplitResult split = temporal_split(full_log, t_split);
    if (split.test_truncated.empty()) {
        raise(ErrorKind::InvalidArgument, "no running traces to predict at the chosen split");
    }

    EventLog train_pool = split.train;
    if (config.validation_fraction > 0 && train_pool.size() >= 2) {
        auto [remainder, validation] =
            sample_validation(train_pool, config.validation_fraction, config.base_seed);
        train_pool = std::move(remainder);
        split.validation = std::move(validation);
    }
    if (config.n_train > train_pool.size()) {
        raise(ErrorKind::InvalidArgument, "n_train = ", config.n_train,
              " exceeds the available training pool of ", train_pool.size());
    }

    // Ground truth comes from the completed form of each test trace.
    std::map<std::string, double> ground_truth;
    for (const auto& trace : split.test_completed.traces) {
        ground_truth[trace.case_id] = kpi_as_double(kpi_value(trace, config.schema));
    }

    auto learner_specs = config.effective_learners();
    KpiKind kpi = config.schema.kpi;

    ReportContext context;
    context.t_split = t_split;
    context.train_size = split.train.size();
    context.test_size = split.test_truncated.size();
    context.skipped_cases = split.skipped_cases.size();
    context.log_digest = file_digest(config.log_path);

    // all_df columns: learners fitted on the whole training pool, external
    // benchmarks from their ingested full-data prediction files.
    for (const auto& spec : learner_specs) {
        FittedLearner fitted = fit(spec, train_pool, config.schema);
        std::vector<std::pair<double, double>> pairs;
        for (const auto& prefix : split.test_truncated.traces) {
            double predicted = kpi == KpiKind::TotalTime
                                   ? predict_total_time(fitted, prefix)
                                   : (predict_occurrence(fitted, prefix,
                                                         *config.schema.target_activity)
                                          ? 1.0
                                          : 0.0);
            pairs.emplace_back(ground_truth.at(prefix.case_id), predicted);
        }
        context.all_df[spec.id()] = metric_of_pairs(pairs, kpi);
    }
    for (const auto& external : config.external_predictions) {
        if (external.all_df_path.empty()) continue;
        auto predictions = read_prediction_file(external.all_df_path);
        std::vector<std::pair<double, double>> pairs;
        for (const auto& prefix : split.test_truncated.traces) {
            auto it = predictions.find(prefix.case_id);
            if (it == predictions.end()) continue;
            pairs.emplace_back(ground_truth.at(prefix.case_id), it->second);
        }
        if (!pairs.empty()) context.all_df[external.name] = metric_of_pairs(pairs, kpi);
    }

    std::map<std::string, ReasoningTag> annotations;
    if (!config.annotations_path.empty()) {
        annotations = read_annotation_sidecar(config.annotations_path);
    }

    ContextSet context_set;
    if (config.hashed) context_set = build_context_set(full_log, config.schema);

    std::vector<std::uint64_t> seeds = config.effective_seeds();
    std::vector<RunResult> runs;

    for (std::size_t rep = 0; rep < seeds.size(); ++rep) {
        std::uint64_t seed = seeds[rep];
        RunResult run;
        run.seed = seed;

        EventLog sample = sample_training(train_pool, config.n_train, seed);
        std::vector<FittedLearner> fitted;
        fitted.reserve(learner_specs.size());
        for (const auto& spec : learner_specs) fitted.push_back(fit(spec, sample, config.schema));

        std::vector<EncodedInstance> train_instances;
        train_instances.reserve(sample.size());
        for (const auto& trace : sample.traces) {
            train_instances.push_back(encode_seq(trace, config.schema, false));
        }

        HashMapping mapping;
        if (config.hashed) mapping = build_mapping(context_set, std::to_string(seed));

        std::filesystem::path run_dir;
        if (!config.output_dir.empty()) {
            run_dir = std::filesystem::path(config.output_dir) / "runs" /
                      ("run_" + std::to_string(rep + 1));
        }

        struct InstanceOutcome {
            const Trace* prefix = nullptr;
            LlmOutcome plain;
            LlmOutcome hashed;
        };
        std::vector<InstanceOutcome> outcomes(split.test_truncated.size());
        if (!run_dir.empty()) {
            std::filesystem::create_directories(run_dir);
            if (config.hashed) std::filesystem::create_directories(run_dir / "hashed");
        }

        // LLM calls fan out across instances up to the gateway's concurrency
        // cap; outcomes land in per-index slots, so scoring is deterministic
        // regardless of completion order.
        auto process_instance = [&](std::size_t index) {
            const Trace& prefix = split.test_truncated.traces[index];
            InstanceOutcome& outcome = outcomes[index];
            outcome.prefix = &prefix;
            EncodedInstance running = encode_seq(prefix, config.schema, true);

            PromptBundle bundle =
                build_prompt(train_instances, running, config.schema, false,
                             config.prompt_char_budget);
            outcome.plain = ask_llm(client, bundle.render(), kpi);
            if (!run_dir.empty()) {
                persist_pair(run_dir, prefix.case_id, outcome.plain.prompt, outcome.plain.reply);
            }

            if (config.hashed) {
                PromptBundle hashed_bundle =
                    build_prompt(train_instances, running, config.schema, true,
                                 config.prompt_char_budget);
                std::string hashed_prompt = anonymize(hashed_bundle.render(), mapping);
                outcome.hashed = ask_llm(client, hashed_prompt, kpi);
                if (!run_dir.empty()) {
                    persist_pair(run_dir / "hashed", prefix.case_id, outcome.hashed.prompt,
                                 outcome.hashed.reply);
                }
            }
        };

        int worker_count = std::max(
            1, std::min({config.llm.max_concurrency,
                         static_cast<int>(std::thread::hardware_concurrency()),
                         static_cast<int>(outcomes.size())}));
        if (worker_count <= 1) {
            for (std::size_t i = 0; i < outcomes.size(); ++i) process_instance(i);
        } else {
            std::atomic<std::size_t> next{0};
            std::atomic<bool> failed{false};
            std::exception_ptr first_error;
            std::mutex error_mutex;
            auto drain = [&] {
                while (!failed) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= outcomes.size()) return;
                    try {
                        process_instance(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                        failed = true;
                        return;
                    }
                }
            };
            std::vector<std::thread> workers;
            workers.reserve(static_cast<std::size_t>(worker_count));
            for (int w = 0; w < worker_count; ++w) workers.emplace_back(drain);
            for (auto& worker : workers) worker.join();
            if (first_error) std::rethrow_exception(first_error);
        }

        // Failed LLM instances are excluded for every predictor alike so all
        // comparisons stay paired.
        std::map<std::string, std::map<std::string, double>> external_runs;
        for (const auto& external : config.external_predictions) {
            if (rep < external.run_paths.size()) {
                external_runs[external.name] = read_prediction_file(external.run_paths[rep]);
            }
        }

        std::map<std::string, std::vector<std::pair<double, double>>> pairs_by_predictor;
        std::vector<std::string> scored_cases;
        for (const auto& outcome : outcomes) {
            bool ok = outcome.plain.ok && (!config.hashed || outcome.hashed.ok);
            for (const auto& [name, preds] : external_runs) {
                ok = ok && preds.count(outcome.prefix->case_id) > 0;
            }
            if (!ok) {
                ++run.n_failed;
                continue;
            }
            const Trace& prefix = *outcome.prefix;
            double actual = ground_truth.at(prefix.case_id);
            scored_cases.push_back(prefix.case_id);

            ReasoningTag tag = tag_reasoning(outcome.plain.reasoning, kpi);
            if (auto it = annotations.find(prefix.case_id); it != annotations.end()) {
                tag = it->second;
            }

            PredictionRecord llm_record;
            llm_record.case_id = prefix.case_id;
            llm_record.predictor = "llm";
            llm_record.predicted = outcome.plain.predicted;
            llm_record.actual = actual;
            llm_record.reasoning = outcome.plain.reasoning;
            llm_record.family_tag = tag.label();
            run.records.push_back(llm_record);
            pairs_by_predictor["llm"].emplace_back(actual, outcome.plain.predicted);

            if (config.hashed) {
                PredictionRecord hashed_record;
                hashed_record.case_id = prefix.case_id;
                hashed_record.predictor = "llm_hashed";
                hashed_record.predicted = outcome.hashed.predicted;
                hashed_record.actual = actual;
                hashed_record.reasoning = outcome.hashed.reasoning;
                hashed_record.family_tag =
                    tag_reasoning(outcome.hashed.reasoning, kpi).label();
                run.records.push_back(hashed_record);
                pairs_by_predictor["llm_hashed"].emplace_back(actual, outcome.hashed.predicted);
            }

            for (std::size_t l = 0; l < learner_specs.size(); ++l) {
                double predicted =
                    kpi == KpiKind::TotalTime
                        ? predict_total_time(fitted[l], prefix)
                        : (predict_occurrence(fitted[l], prefix,
                                              *config.schema.target_activity)
                               ? 1.0
                               : 0.0);
                PredictionRecord record;
                record.case_id = prefix.case_id;
                record.predictor = learner_specs[l].id();
                record.predicted = predicted;
                record.actual = actual;
                run.records.push_back(record);
                pairs_by_predictor[record.predictor].emplace_back(actual, predicted);
            }

            for (const auto& [name, preds] : external_runs) {
                PredictionRecord record;
                record.case_id = prefix.case_id;
                record.predictor = name;
                record.predicted = preds.at(prefix.case_id);
                record.actual = actual;
                run.records.push_back(record);
                pairs_by_predictor[name].emplace_back(actual, record.predicted);
            }
        }

        run.n_scored = scored_cases.size();
        if (run.n_scored == 0) {
            raise(ErrorKind::Degenerate, "run ", rep + 1, " scored no instances");
        }
        for (const auto& [predictor, pairs] : pairs_by_predictor) {
            run.metric_by_predictor[predictor] = metric_of_pairs(pairs, kpi);
        }

        // Per-instance winners among the LLM and the learners.
        std::vector<std::string> contenders = {"llm"};
        for (const auto& spec : learner_specs) contenders.push_back(spec.id());
        std::size_t window = config.best_window == 0
                                 ? scored_cases.size()
                                 : std::min(config.best_window, scored_cases.size());
        for (std::size_t i = 0; i < window; ++i) {
            const std::string* winner = nullptr;
            double best_err = 0;
            for (const auto& name : contenders) {
                const auto& [actual, predicted] = pairs_by_predictor[name][i];
                double err = std::fabs(actual - predicted);
                if (!winner || err < best_err) {
                    winner = &name;
                    best_err = err;
                }
            }
            run.best_counts[*winner] += 1;
        }
        runs.push_back(std::move(run));
    }

    if (!config.cache_dir.empty()) {
        context.cache_digest = ReplayCache(config.cache_dir).content_digest();
    }

    auto grid = config.convergence_grid.empty() ? default_convergence_grid(full_log.size())
                                                : config.convergence_grid;
    context.convergence = convergence_curve(full_log, config.schema, grid, config.base_seed);

    return aggregate_runs(config, std::move(runs), std::move(context));
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    std::optional<ReplayCache> cache;
    if (!config.cache_dir.empty()) cache.emplace(config.cache_dir);
    auto client = make_llm_client(config.llm, cache ? &*cache : nullptr, config.mode);
    return run_experiment(config, *client);
}

// ---------------------------------------------------------------------------
// Aggregation

ExperimentReport aggregate_runs(const ExperimentConfig& config, std::vector<RunResult> runs,
                                ReportContext context) {
    if (runs.empty()) raise(ErrorKind::InvalidArgument, "no runs to aggregate");
    KpiKind kpi = config.schema.kpi;
    auto learner_specs = config.effective_learners();

    ExperimentReport report;
    report.config = config;
    report.config_digest = config_digest(config);
    report.cache_digest = context.cache_digest;
    report.log_digest = context.log_digest;
    report.t_split = context.t_split;
    report.train_size = context.train_size;
    report.test_size = context.test_size;
    report.skipped_cases = context.skipped_cases;
    report.convergence = std::move(context.convergence);
    report.runs = std::move(runs);

    report.predictor_order.push_back("llm");
    if (config.hashed) report.predictor_order.push_back("llm_hashed");
    for (const auto& external : config.external_predictions) {
        report.predictor_order.push_back(external.name);
    }
    for (const auto& spec : learner_specs) report.predictor_order.push_back(spec.id());

    // Mean and sample standard deviation of the per-run metric. Benchmarks
    // ingested with only a full-data prediction file keep an all_df-only row.
    for (const auto& name : report.predictor_order) {
        std::vector<double> values;
        for (const auto& run : report.runs) {
            auto it = run.metric_by_predictor.find(name);
            if (it != run.metric_by_predictor.end()) values.push_back(it->second);
        }
        PredictorSummary summary;
        summary.has_runs = !values.empty();
        if (auto it = context.all_df.find(name); it != context.all_df.end()) {
            summary.all_df = it->second;
        }
        if (values.empty() && !summary.all_df) continue;
        if (!values.empty()) {
            double sum = 0;
            for (double v : values) sum += v;
            summary.mean = sum / static_cast<double>(values.size());
            if (values.size() > 1) {
                double ss = 0;
                for (double v : values) ss += (v - summary.mean) * (v - summary.mean);
                summary.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
            }
        }
        for (const auto& run : report.runs) {
            if (auto it = run.best_counts.find(name); it != run.best_counts.end()) {
                summary.best_total += it->second;
            }
        }
        report.summaries[name] = summary;
    }

    // Pooled per-instance series, keyed (run, case), for the paired tests.
    auto pooled_errors = [&](const std::string& predictor) {
        std::vector<double> out;
        for (const auto& run : report.runs) {
            for (const auto& record : run.records) {
                if (record.predictor != predictor) continue;
                if (kpi == KpiKind::TotalTime) {
                    out.push_back(std::fabs(record.actual - record.predicted));
                } else {
                    bool correct = (record.actual >= 0.5) == (record.predicted >= 0.5);
                    out.push_back(correct ? 0.0 : 1.0);
                }
            }
        }
        return out;
    };
    std::vector<double> llm_errors = pooled_errors("llm");

    for (const auto& spec : learner_specs) {
        std::vector<double> learner_errors = pooled_errors(spec.id());
        TestResult result;
        try {
            result = wilcoxon_signed_rank(llm_errors, learner_errors);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Degenerate) throw;
            result.test = "wilcoxon_signed_rank";
            result.degenerate = true;
            result.p_value = 1.0;
            result.decision = Decision::Retain;
            result.note = e.what();
        }
        report.wilcoxon_vs_llm[spec.id()] = result;
        report.summaries[spec.id()].significance =
            result.degenerate ? "ns" : significance_stars(result.p_value);
    }

    if (config.hashed && report.runs.size() >= 2) {
        std::vector<std::vector<double>> scores;
        bool complete = true;
        for (const auto& run : report.runs) {
            auto plain = run.metric_by_predictor.find("llm");
            auto hashed = run.metric_by_predictor.find("llm_hashed");
            if (plain == run.metric_by_predictor.end() ||
                hashed == run.metric_by_predictor.end()) {
                complete = false;
                break;
            }
            scores.push_back({plain->second, hashed->second});
        }
        if (complete) {
            TestResult result;
            try {
                result = friedman_nemenyi(scores);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Degenerate) throw;
                result.test = "friedman_nemenyi";
                result.degenerate = true;
                result.p_value = 1.0;
                result.decision = Decision::Retain;
                result.note = e.what();
            }
            report.hash_comparison = result;
        }
    }

    // Family occurrence counts over the plain-arm LLM reasoning tags.
    for (const auto& run : report.runs) {
        for (const auto& record : run.records) {
            if (record.predictor != "llm" || record.family_tag == "untagged" ||
                record.family_tag.empty()) {
                continue;
            }
            report.family_occurrence[record.family_tag] += 1;
        }
    }
    if (!report.family_occurrence.empty()) {
        report.gt = good_turing(report.family_occurrence);
    }

    // Delta vs the LLM restricted to the instances tagged with each
    // learner's own family.
    for (const auto& spec : learner_specs) {
        const std::string id = spec.id();
        auto& summary = report.summaries[id];
        std::size_t occurrence = 0;
        std::vector<std::pair<double, double>> llm_pairs, learner_pairs;
        for (const auto& run : report.runs) {
            std::set<std::string> tagged_cases;
            for (const auto& record : run.records) {
                if (record.predictor == "llm" && record.family_tag == id) {
                    tagged_cases.insert(record.case_id);
                }
            }
            occurrence += tagged_cases.size();
            for (const auto& record : run.records) {
                if (!tagged_cases.count(record.case_id)) continue;
                if (record.predictor == "llm") {
                    llm_pairs.emplace_back(record.actual, record.predicted);
                } else if (record.predictor == id) {
                    learner_pairs.emplace_back(record.actual, record.predicted);
                }
            }
        }
        summary.occurrence = occurrence;
        if (occurrence == 0 || llm_pairs.empty() || learner_pairs.empty()) continue;
        double llm_metric = metric_of_pairs(llm_pairs, kpi);
        double learner_metric = metric_of_pairs(learner_pairs, kpi);
        char buf[64];
        if (kpi == KpiKind::TotalTime) {
            if (llm_metric > 0) {
                double delta = (learner_metric - llm_metric) / llm_metric * 100.0;
                std::snprintf(buf, sizeof(buf), "%.0f%%", delta);
                summary.delta_llm = buf;
            }
        } else {
            std::snprintf(buf, sizeof(buf), "%.2f", llm_metric - learner_metric);
            summary.delta_llm = buf;
        }
    }

    return report;
}

}  // namespace ppm
