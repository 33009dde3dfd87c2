// Seeds a replay cache for an experiment config by recording a scripted
// stand-in LLM (a beta-learner echo) through the full pipeline. Afterwards
// `ppmkit run --config <cfg> --mode replay` reproduces the experiment with
// no network at all.

#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "ppmkit/experiment.hpp"

using namespace ppm;

int main(int argc, char** argv) {
    CLI::App app{"Seed a replay cache with a beta-learner echo responder"};
    std::string config_path, family_name, aggregation_name;
    int k = 9;
    app.add_option("--config", config_path, "Experiment config (TOML)")->required();
    app.add_option("--family", family_name, "Echo learner family (default: knn_act or activity_based)");
    app.add_option("--agg", aggregation_name, "Echo aggregation (regression families)");
    app.add_option("--k", k, "Echo neighbour count");
    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig config = load_config(config_path);
        if (config.cache_dir.empty()) {
            raise(ErrorKind::Config, "config has no llm.cache_dir to seed");
        }

        BetaLearnerSpec spec;
        if (config.schema.kpi == KpiKind::TotalTime) {
            spec.family = BetaFamily::KnnAct;
            spec.aggregation = Aggregation::Median;
        } else {
            spec.family = BetaFamily::ActivityBased;
        }
        if (!family_name.empty()) spec.family = parse_family(family_name);
        if (!aggregation_name.empty()) spec.aggregation = parse_aggregation(aggregation_name);
        spec.k = k;
        spec.validate();

        ReplayCache cache(config.cache_dir);
        RecordingLlmClient recorder(
            std::make_unique<ScriptedLlmClient>(std::map<std::string, std::string>{},
                                                make_beta_echo_generator(spec, config.schema)),
            &cache, config.llm);

        config.output_dir.clear();  // no prompt persistence during seeding
        run_experiment(config, recorder);
        std::cout << "seeded " << cache.entry_count() << " cache entries in "
                  << config.cache_dir << " (echo learner: " << spec.id() << ")\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
