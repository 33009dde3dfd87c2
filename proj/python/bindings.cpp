#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ppmkit/anonymizer.hpp"
#include "ppmkit/beta_learners.hpp"
#include "ppmkit/event_log.hpp"
#include "ppmkit/experiment.hpp"
#include "ppmkit/prompt_engine.hpp"
#include "ppmkit/split_sampler.hpp"
#include "ppmkit/stats_eval.hpp"
#include "ppmkit/trace_encoding.hpp"

namespace py = pybind11;
using namespace ppm;

PYBIND11_MODULE(_ppmkit, m) {
    m.doc() = "Predictive-process-monitoring toolkit: event-log model, trace encodings, "
              "prompt assembly/parsing, semantic hashing, beta-learner baselines and "
              "statistical evaluation.";

    py::register_exception<Error>(m, "PpmError");

    py::enum_<AttrType>(m, "AttrType")
        .value("Numeric", AttrType::Numeric)
        .value("Categorical", AttrType::Categorical);
    py::enum_<AttrScope>(m, "AttrScope")
        .value("Global", AttrScope::Global)
        .value("Local", AttrScope::Local);
    py::enum_<KpiKind>(m, "KpiKind")
        .value("TotalTime", KpiKind::TotalTime)
        .value("ActivityOccurrence", KpiKind::ActivityOccurrence);
    py::enum_<BetaFamily>(m, "BetaFamily")
        .value("KnnAct", BetaFamily::KnnAct)
        .value("KnnAtt", BetaFamily::KnnAtt)
        .value("TimeSeq", BetaFamily::TimeSeq)
        .value("PathPred", BetaFamily::PathPred)
        .value("ActivityBased", BetaFamily::ActivityBased)
        .value("StateBased", BetaFamily::StateBased)
        .value("AttBased", BetaFamily::AttBased)
        .value("PositiveEvidence", BetaFamily::PositiveEvidence);
    py::enum_<Aggregation>(m, "Aggregation")
        .value("NoAggregation", Aggregation::None)
        .value("Mean", Aggregation::Mean)
        .value("Median", Aggregation::Median)
        .value("Mode", Aggregation::Mode);
    py::enum_<Decision>(m, "Decision")
        .value("Reject", Decision::Reject)
        .value("Retain", Decision::Retain);

    py::class_<AttributeDecl>(m, "AttributeDecl")
        .def(py::init<>())
        .def(py::init([](const std::string& name, AttrType type, AttrScope scope,
                         const std::string& description) {
                 return AttributeDecl{name, type, scope, description};
             }),
             py::arg("name"), py::arg("type") = AttrType::Categorical,
             py::arg("scope") = AttrScope::Global, py::arg("description") = "")
        .def_readwrite("name", &AttributeDecl::name)
        .def_readwrite("type", &AttributeDecl::type)
        .def_readwrite("scope", &AttributeDecl::scope)
        .def_readwrite("description", &AttributeDecl::description);

    py::class_<LogSchema>(m, "LogSchema")
        .def(py::init<>())
        .def_readwrite("attributes", &LogSchema::attributes)
        .def_readwrite("kpi", &LogSchema::kpi)
        .def_readwrite("target_activity", &LogSchema::target_activity)
        .def_readwrite("domain_background", &LogSchema::domain_background)
        .def("validate", &LogSchema::validate);

    py::class_<Event>(m, "Event")
        .def(py::init<>())
        .def(py::init([](const std::string& activity, Minutes t_start, Minutes t_end,
                         const std::vector<std::pair<std::string, AttributeValue>>& attrs) {
                 return Event{activity, t_start, t_end, attrs};
             }),
             py::arg("activity"), py::arg("t_start"), py::arg("t_end"),
             py::arg("attrs") = std::vector<std::pair<std::string, AttributeValue>>{})
        .def_readwrite("activity", &Event::activity)
        .def_readwrite("t_start", &Event::t_start)
        .def_readwrite("t_end", &Event::t_end)
        .def_readwrite("attrs", &Event::attrs);

    py::class_<Trace>(m, "Trace")
        .def(py::init<>())
        .def(py::init([](const std::string& case_id, const std::vector<Event>& events) {
                 return Trace{case_id, events};
             }),
             py::arg("case_id"), py::arg("events") = std::vector<Event>{})
        .def_readwrite("case_id", &Trace::case_id)
        .def_readwrite("events", &Trace::events)
        .def("__len__", &Trace::size)
        .def("activities", &Trace::activities)
        .def("cumulative_elapsed", &Trace::cumulative_elapsed);

    py::class_<EventLog>(m, "EventLog")
        .def(py::init<>())
        .def_readwrite("schema", &EventLog::schema)
        .def_readwrite("traces", &EventLog::traces)
        .def("__len__", &EventLog::size)
        .def("activity_alphabet", &EventLog::activity_alphabet);

    py::class_<SplitResult>(m, "SplitResult")
        .def_readonly("t_split", &SplitResult::t_split)
        .def_readonly("train", &SplitResult::train)
        .def_readonly("test_completed", &SplitResult::test_completed)
        .def_readonly("test_truncated", &SplitResult::test_truncated)
        .def_readonly("skipped_cases", &SplitResult::skipped_cases);

    py::class_<EncodedInstance>(m, "EncodedInstance")
        .def_readonly("payload", &EncodedInstance::payload)
        .def_readonly("row", &EncodedInstance::row)
        .def_readonly("is_running", &EncodedInstance::is_running)
        .def_readonly("case_id", &EncodedInstance::case_id);

    py::class_<DecodedSequential>(m, "DecodedSequential")
        .def_readonly("global_attrs", &DecodedSequential::global_attrs)
        .def_readonly("act_time_seq", &DecodedSequential::act_time_seq)
        .def_readonly("is_running", &DecodedSequential::is_running)
        .def_readonly("total_time", &DecodedSequential::total_time)
        .def_readonly("occurrence", &DecodedSequential::occurrence)
        .def_readonly("case_id", &DecodedSequential::case_id);

    py::class_<ContextSet>(m, "ContextSet")
        .def_readonly("tokens", &ContextSet::tokens)
        .def("__len__", &ContextSet::size)
        .def("__contains__",
             [](const ContextSet& s, const std::string& token) { return s.contains(token); });

    py::class_<HashMapping>(m, "HashMapping")
        .def_readonly("entries", &HashMapping::entries)
        .def_readonly("salt", &HashMapping::salt)
        .def("inverse", &HashMapping::inverse)
        .def("id_for", [](const HashMapping& mapping, const std::string& token) {
            const std::string* id = mapping.id_for(token);
            return id ? std::optional<std::string>(*id) : std::nullopt;
        });

    py::class_<PromptBundle>(m, "PromptBundle")
        .def_readonly("kpi", &PromptBundle::kpi)
        .def_readonly("hashed", &PromptBundle::hashed)
        .def_readonly("dropped_instances", &PromptBundle::dropped_instances)
        .def("render", &PromptBundle::render);

    py::class_<LlmResponse>(m, "LlmResponse")
        .def_readonly("reasoning", &LlmResponse::reasoning)
        .def_readonly("answer", &LlmResponse::answer)
        .def_readonly("raw", &LlmResponse::raw);

    py::class_<BetaLearnerSpec>(m, "BetaLearnerSpec")
        .def(py::init<>())
        .def(py::init([](BetaFamily family, Aggregation aggregation, int k) {
                 BetaLearnerSpec spec;
                 spec.family = family;
                 spec.aggregation = aggregation;
                 spec.k = k;
                 return spec;
             }),
             py::arg("family"), py::arg("aggregation") = Aggregation::None, py::arg("k") = 0)
        .def_readwrite("family", &BetaLearnerSpec::family)
        .def_readwrite("aggregation", &BetaLearnerSpec::aggregation)
        .def_readwrite("k", &BetaLearnerSpec::k)
        .def_readwrite("mode_bin_minutes", &BetaLearnerSpec::mode_bin_minutes)
        .def_readwrite("tie_predict_true", &BetaLearnerSpec::tie_predict_true)
        .def("id", &BetaLearnerSpec::id)
        .def("validate", &BetaLearnerSpec::validate);

    py::class_<FittedLearner>(m, "FittedLearner")
        .def_readonly("spec", &FittedLearner::spec)
        .def_readonly("alphabet", &FittedLearner::alphabet)
        .def("train_size", &FittedLearner::train_size);

    py::class_<MetricResult>(m, "MetricResult")
        .def_readonly("value", &MetricResult::value)
        .def_readonly("n", &MetricResult::n)
        .def_readonly("degenerate", &MetricResult::degenerate)
        .def_readonly("precision", &MetricResult::precision)
        .def_readonly("recall", &MetricResult::recall);

    py::class_<TestResult>(m, "TestResult")
        .def_readonly("test", &TestResult::test)
        .def_readonly("statistic", &TestResult::statistic)
        .def_readonly("p_value", &TestResult::p_value)
        .def_readonly("alpha", &TestResult::alpha)
        .def_readonly("decision", &TestResult::decision)
        .def_readonly("degenerate", &TestResult::degenerate)
        .def_readonly("avg_ranks", &TestResult::avg_ranks)
        .def_readonly("critical_difference", &TestResult::critical_difference)
        .def_readonly("pairwise_reject", &TestResult::pairwise_reject);

    py::class_<GoodTuringEstimate>(m, "GoodTuringEstimate")
        .def_readonly("counts", &GoodTuringEstimate::counts)
        .def_readonly("total", &GoodTuringEstimate::total)
        .def_readonly("freq_of_freq", &GoodTuringEstimate::freq_of_freq)
        .def_readonly("p_star", &GoodTuringEstimate::p_star)
        .def_readonly("p0", &GoodTuringEstimate::p0)
        .def("expected_novel", &GoodTuringEstimate::expected_novel);

    py::class_<ReasoningTag>(m, "ReasoningTag")
        .def_readonly("family", &ReasoningTag::family)
        .def_readonly("aggregation", &ReasoningTag::aggregation)
        .def("tagged", &ReasoningTag::tagged)
        .def("label", &ReasoningTag::label);

    // Event-log model.
    m.def("load_csv", &load_csv, py::arg("path"), py::arg("schema"));
    m.def("load_csv_text", &load_csv_text, py::arg("text"), py::arg("schema"),
          py::arg("origin") = "<memory>");
    m.def("prefixes", &prefixes, py::arg("trace"));
    m.def("kpi_value", &kpi_value, py::arg("trace"), py::arg("schema"));
    m.def("total_time_minutes", &total_time_minutes, py::arg("trace"));
    m.def("activity_occurs", &activity_occurs, py::arg("trace"), py::arg("target"));

    // Temporal splitting and sampling.
    m.def("compute_t_split", &compute_t_split, py::arg("log"), py::arg("fraction"));
    m.def("temporal_split", &temporal_split, py::arg("log"), py::arg("t_split"));
    m.def("sample_training", &sample_training, py::arg("train"), py::arg("n"), py::arg("seed"));
    m.def("sample_validation", &sample_validation, py::arg("train"), py::arg("fraction"),
          py::arg("seed"));

    // Encodings.
    m.def("encode_seq", &encode_seq, py::arg("trace"), py::arg("schema"), py::arg("running"));
    m.def("decode_seq", [](const std::string& payload) { return decode_seq(payload); },
          py::arg("payload"));
    m.def("encode_aggr", &encode_aggr, py::arg("trace"), py::arg("schema"), py::arg("alphabet"),
          py::arg("running") = false);

    // Anonymization.
    m.def("build_context_set", &build_context_set, py::arg("log"), py::arg("schema"));
    m.def("hash_token",
          [](const std::string& token, const std::string& salt) {
              return hash_token(token, salt);
          },
          py::arg("token"), py::arg("salt"));
    m.def("build_mapping", &build_mapping, py::arg("context"), py::arg("salt"));
    m.def("anonymize",
          [](const std::string& text, const HashMapping& mapping) {
              return anonymize(text, mapping);
          },
          py::arg("text"), py::arg("mapping"));

    // Prompting.
    m.def("build_prompt", &build_prompt, py::arg("train"), py::arg("running"), py::arg("schema"),
          py::arg("hashed"), py::arg("char_budget") = 0);
    m.def("parse_response", &parse_response, py::arg("raw"), py::arg("kpi"));

    // Beta learners.
    m.def("fit", &fit, py::arg("spec"), py::arg("train"), py::arg("schema"));
    m.def("predict_total_time", &predict_total_time, py::arg("learner"), py::arg("prefix"));
    m.def("predict_occurrence", &predict_occurrence, py::arg("learner"), py::arg("prefix"),
          py::arg("target"));
    m.def("default_learners", &default_learners, py::arg("kpi"));

    // Metrics, tests and estimation.
    m.def("mae", &mae, py::arg("pairs"));
    m.def("f1", &f1, py::arg("pairs"));
    m.def("wilcoxon_signed_rank", &wilcoxon_signed_rank, py::arg("a"), py::arg("b"),
          py::arg("alpha") = 0.05);
    m.def("friedman_nemenyi", &friedman_nemenyi, py::arg("scores"), py::arg("alpha") = 0.05);
    m.def("nemenyi_q", &nemenyi_q, py::arg("alpha"), py::arg("k"));
    m.def("good_turing", &good_turing, py::arg("counts"));
    m.def("tag_reasoning", &tag_reasoning, py::arg("reasoning"),
          py::arg("kpi_hint") = std::nullopt);
    m.def("convergence_curve", &convergence_curve, py::arg("log"), py::arg("schema"),
          py::arg("grid"), py::arg("seed"));
    m.def("ks_statistic", &ks_statistic, py::arg("sample"), py::arg("reference"));
}
