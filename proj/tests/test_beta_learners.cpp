#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ppmkit/beta_learners.hpp"
#include "support/fixtures.hpp"

using namespace ppm;
using namespace ppm::testing;

TEST_SUITE_BEGIN("beta_learners");

namespace {

EventLog tiny_log(const std::vector<std::pair<std::vector<std::string>, Minutes>>& traces,
                  const std::vector<double>& amounts, const LogSchema& schema) {
    EventLog log;
    log.schema = schema;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        Trace trace;
        trace.case_id = "t" + std::to_string(i);
        const auto& [activities, total] = traces[i];
        Minutes step = total / std::max<Minutes>(1, static_cast<Minutes>(activities.size()));
        Minutes t = 0;
        for (std::size_t e = 0; e < activities.size(); ++e) {
            Event event;
            event.activity = activities[e];
            event.t_start = t;
            event.t_end = e + 1 == activities.size() ? total : t + step;
            event.attrs = {{"amount", AttributeValue{amounts[i]}},
                           {"channel", AttributeValue{"online"}}};
            t = event.t_end;
            trace.events.push_back(std::move(event));
        }
        log.traces.push_back(std::move(trace));
    }
    return log;
}

Trace prefix_of(const std::vector<std::string>& activities, double amount) {
    Trace trace;
    trace.case_id = "prefix";
    Minutes t = 0;
    for (const auto& activity : activities) {
        Event event;
        event.activity = activity;
        event.t_start = t;
        event.t_end = t + 10;
        event.attrs = {{"amount", AttributeValue{amount}},
                       {"channel", AttributeValue{"online"}}};
        t += 20;
        trace.events.push_back(std::move(event));
    }
    return trace;
}

/// Exhaustive-scan oracle: recompute the distance for every training trace
/// with the learner's published distance function and sort by
/// (distance, index). Independent of the production neighbour search.
std::vector<std::size_t> oracle_neighbors(const FittedLearner& learner, const Trace& prefix) {
    std::vector<double> distances;
    for (std::size_t i = 0; i < learner.train_size(); ++i) {
        double d = 0;
        switch (learner.spec.family) {
            case BetaFamily::KnnAct:
            case BetaFamily::ActivityBased:
                d = activity_distance(learner, activity_count_vector(learner, prefix), i);
                break;
            case BetaFamily::KnnAtt:
            case BetaFamily::AttBased: {
                std::vector<AttributeValue> query;
                for (const auto& [name, value] : prefix.global_values(learner.schema)) {
                    query.push_back(value);
                }
                d = attribute_distance(learner, query, i);
                break;
            }
            case BetaFamily::TimeSeq:
                d = time_seq_distance(learner, prefix.cumulative_elapsed(), i);
                break;
            default:
                FAIL("not a kNN family");
        }
        distances.push_back(d);
    }
    std::vector<std::size_t> order(distances.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (distances[a] != distances[b]) return distances[a] < distances[b];
        return a < b;
    });
    order.resize(std::min<std::size_t>(order.size(),
                                       static_cast<std::size_t>(learner.effective_k())));
    return order;
}

}  // namespace

TEST_CASE("spec validation") {
    BetaLearnerSpec spec;
    spec.family = BetaFamily::KnnAct;
    spec.aggregation = Aggregation::None;
    CHECK_THROWS_AS(spec.validate(), Error);

    spec.family = BetaFamily::PositiveEvidence;
    spec.aggregation = Aggregation::Mean;
    CHECK_THROWS_AS(spec.validate(), Error);

    spec.aggregation = Aggregation::None;
    CHECK_NOTHROW(spec.validate());
    CHECK(spec.id() == "positive_evidence");
    CHECK(BetaLearnerSpec{BetaFamily::KnnAct, Aggregation::Median}.id() == "knn_act median");
}

TEST_CASE("fit") {
    LogSchema schema = random_log_schema();
    SUBCASE("empty training log is an error") {
        EventLog empty;
        empty.schema = schema;
        CHECK_THROWS_AS(fit(BetaLearnerSpec{BetaFamily::KnnAct, Aggregation::Mean}, empty, schema),
                        Error);
    }
    SUBCASE("classification without a target is an error") {
        Rng rng = make_rng(61);
        EventLog log = random_log(rng, schema, {.n_traces = 3});
        LogSchema no_target = schema;  // kpi total_time, no target
        CHECK_THROWS_AS(
            fit(BetaLearnerSpec{BetaFamily::StateBased, Aggregation::None}, log, no_target), Error);
    }
    SUBCASE("one-trace log builds a one-row index") {
        Rng rng = make_rng(62);
        EventLog log = random_log(rng, schema, {.n_traces = 1});
        FittedLearner learner =
            fit(BetaLearnerSpec{BetaFamily::KnnAct, Aggregation::Mean}, log, schema);
        CHECK(learner.train_size() == 1);
    }
    SUBCASE("alphabet equals the activities observed in the sample") {
        Rng rng = make_rng(63);
        EventLog log = random_log(rng, schema, {.n_traces = 12});
        FittedLearner learner =
            fit(BetaLearnerSpec{BetaFamily::KnnAct, Aggregation::Mean}, log, schema);
        std::set<std::string> expected;
        for (const auto& trace : log.traces) {
            for (const auto& e : trace.events) expected.insert(e.activity);
        }
        CHECK(learner.alphabet == std::vector<std::string>(expected.begin(), expected.end()));
    }
}

TEST_CASE("k=1 identity: a single training trace answers every query") {
    LogSchema schema = random_log_schema();
    EventLog log = tiny_log({{{"A", "B"}, 7486}}, {5000.0}, schema);
    Trace prefix = prefix_of({"C"}, 123.0);
    for (BetaFamily family :
         {BetaFamily::KnnAct, BetaFamily::KnnAtt, BetaFamily::TimeSeq, BetaFamily::PathPred}) {
        for (Aggregation agg : {Aggregation::Mean, Aggregation::Median, Aggregation::Mode}) {
            FittedLearner learner = fit(BetaLearnerSpec{family, agg}, log, schema);
            CHECK(predict_total_time(learner, prefix) == doctest::Approx(7486));
        }
    }
}

TEST_CASE("knn_act mean with two equidistant neighbours averages them") {
    LogSchema schema = random_log_schema();
    // Count vectors: prefix {A}, neighbours {A,B} and {A,C} are equidistant;
    // the third trace {D,D,D} is farther away.
    EventLog log = tiny_log({{{"A", "B"}, 100}, {{"A", "C"}, 300}, {{"D", "D", "D"}, 900}},
                            {1.0, 1.0, 1.0}, schema);
    BetaLearnerSpec spec{BetaFamily::KnnAct, Aggregation::Mean};
    spec.k = 2;
    FittedLearner learner = fit(spec, log, schema);
    CHECK(predict_total_time(learner, prefix_of({"A"}, 1.0)) == doctest::Approx(200));
}

TEST_CASE("path_pred median over the traces extending the prefix") {
    LogSchema schema = random_log_schema();
    EventLog log = tiny_log(
        {
            {{"A", "B", "C"}, 4771},
            {{"A", "B", "D"}, 9713},
            {{"A", "B", "E"}, 18803},
            {{"X", "Y"}, 50},
        },
        {1.0, 1.0, 1.0, 1.0}, schema);
    FittedLearner learner = fit(BetaLearnerSpec{BetaFamily::PathPred, Aggregation::Median}, log, schema);
    CHECK(predict_total_time(learner, prefix_of({"A", "B"}, 1.0)) == doctest::Approx(9713));
}

TEST_CASE("path_pred backoff") {
    LogSchema schema = random_log_schema();
    EventLog log = tiny_log({{{"A", "B"}, 100}, {{"Q", "B", "C"}, 500}}, {1.0, 1.0}, schema);
    FittedLearner learner = fit(BetaLearnerSpec{BetaFamily::PathPred, Aggregation::Mean}, log, schema);
    SUBCASE("full prefix match wins") {
        CHECK(predict_total_time(learner, prefix_of({"A", "B"}, 1.0)) == doctest::Approx(100));
    }
    SUBCASE("suffix backoff finds a containing trace") {
        // No training trace starts with <Z, B>, but the last activity pair
        // backoff j=1 matches on "B" in both traces.
        CHECK(predict_total_time(learner, prefix_of({"Z", "B"}, 1.0)) == doctest::Approx(300));
    }
    SUBCASE("no match at all falls back to the whole set") {
        CHECK(predict_total_time(learner, prefix_of({"Z"}, 1.0)) == doctest::Approx(300));
    }
}

TEST_CASE("classification families") {
    LogSchema schema = random_log_schema(KpiKind::ActivityOccurrence);
    schema.target_activity = "T";
    // Four traces contain "L" as last-activity evidence; target T occurs in 3.
    EventLog log = tiny_log(
        {
            {{"L", "T"}, 100},
            {{"L", "T"}, 100},
            {{"L", "T"}, 100},
            {{"L", "X"}, 100},
            {{"Z"}, 100},
        },
        {1.0, 1.0, 1.0, 1.0, 1.0}, schema);

    SUBCASE("positive evidence is membership in the prefix") {
        FittedLearner learner =
            fit(BetaLearnerSpec{BetaFamily::PositiveEvidence, Aggregation::None}, log, schema);
        CHECK(predict_occurrence(learner, prefix_of({"T", "A"}, 1.0), "T"));
        CHECK_FALSE(predict_occurrence(learner, prefix_of({"A"}, 1.0), "T"));
    }
    SUBCASE("state_based uses the fraction among traces containing the last activity") {
        FittedLearner learner =
            fit(BetaLearnerSpec{BetaFamily::StateBased, Aggregation::None}, log, schema);
        CHECK(predict_occurrence(learner, prefix_of({"L"}, 1.0), "T"));  // 3/4 >= 0.5
        CHECK_FALSE(predict_occurrence(learner, prefix_of({"Z"}, 1.0), "T"));  // 0/1
    }
    SUBCASE("activity_based majority vote with ties predicting true") {
        BetaLearnerSpec spec{BetaFamily::ActivityBased, Aggregation::None};
        spec.k = 4;
        FittedLearner learner = fit(spec, log, schema);
        CHECK(predict_occurrence(learner, prefix_of({"L"}, 1.0), "T"));
    }
}

TEST_CASE("neighbour sets match the exhaustive oracle") {
    Rng rng = make_rng(64);
    for (int trial = 0; trial < 60; ++trial) {
        KpiKind kpi = bounded(rng, 2) == 0 ? KpiKind::TotalTime : KpiKind::ActivityOccurrence;
        LogSchema schema = random_log_schema(kpi);
        EventLog log = random_log(rng, schema,
                                  {.n_traces = 2 + bounded(rng, 19), .min_events = 1,
                                   .max_events = 6});
        EventLog query_log = random_log(rng, schema, {.n_traces = 1, .max_events = 5});
        const Trace& prefix = query_log.traces[0];

        std::vector<BetaFamily> families =
            kpi == KpiKind::TotalTime
                ? std::vector<BetaFamily>{BetaFamily::KnnAct, BetaFamily::KnnAtt,
                                          BetaFamily::TimeSeq}
                : std::vector<BetaFamily>{BetaFamily::ActivityBased, BetaFamily::AttBased};
        for (BetaFamily family : families) {
            BetaLearnerSpec spec{family, is_regression(family) ? Aggregation::Mean
                                                               : Aggregation::None};
            spec.k = 1 + static_cast<int>(bounded(rng, 12));
            FittedLearner learner = fit(spec, log, schema);
            CHECK(nearest_neighbors(learner, prefix) == oracle_neighbors(learner, prefix));
        }
    }
}

TEST_CASE("attribute scaling invariance") {
    // Multiplying a numeric attribute by a positive constant in both train
    // and query leaves the neighbour selection unchanged.
    LogSchema schema = random_log_schema();
    Rng rng = make_rng(65);
    for (int trial = 0; trial < 20; ++trial) {
        EventLog log = random_log(rng, schema, {.n_traces = 10});
        EventLog scaled = log;
        for (auto& trace : scaled.traces) {
            for (auto& e : trace.events) {
                e.attrs[0].second = std::get<double>(e.attrs[0].second) * 37.0;
            }
        }
        Trace prefix = prefix_of({"Act_0"}, 1500.0);
        Trace scaled_prefix = prefix_of({"Act_0"}, 1500.0 * 37.0);

        BetaLearnerSpec spec{BetaFamily::KnnAtt, Aggregation::Mean};
        spec.k = 3;
        CHECK(nearest_neighbors(fit(spec, log, schema), prefix) ==
              nearest_neighbors(fit(spec, scaled, schema), scaled_prefix));
    }
}

TEST_CASE("aggregation") {
    SUBCASE("bounded by min and max") {
        Rng rng = make_rng(66);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> values;
            for (std::size_t i = 0; i < 1 + bounded(rng, 12); ++i) {
                values.push_back(static_cast<double>(bounded(rng, 10000)));
            }
            double lo = *std::min_element(values.begin(), values.end());
            double hi = *std::max_element(values.begin(), values.end());
            for (Aggregation agg : {Aggregation::Mean, Aggregation::Median, Aggregation::Mode}) {
                double value = aggregate(values, agg, 60.0);
                CHECK(value >= lo);
                CHECK(value <= hi);
            }
        }
    }
    SUBCASE("mode picks the most populous bin, lowest bin on ties") {
        // Bin width 60: {0,10} in bin 0, {600} alone in bin 10.
        CHECK(aggregate({0, 10, 600}, Aggregation::Mode, 60.0) == doctest::Approx(5));
        // Tie between bin 0 and bin 10 resolves to the lower bin.
        CHECK(aggregate({0, 10, 600, 610}, Aggregation::Mode, 60.0) == doctest::Approx(5));
    }
    SUBCASE("median of an even count averages the middle pair") {
        CHECK(aggregate({1, 2, 3, 4}, Aggregation::Median, 60.0) == doctest::Approx(2.5));
    }
}

TEST_CASE("determinism") {
    Rng rng = make_rng(67);
    LogSchema schema = random_log_schema();
    EventLog log = random_log(rng, schema, {.n_traces = 15});
    Trace prefix = prefix_of({"Act_1", "Act_2"}, 4200.0);
    for (const auto& spec : default_learners(KpiKind::TotalTime)) {
        FittedLearner a = fit(spec, log, schema);
        FittedLearner b = fit(spec, log, schema);
        CHECK(predict_total_time(a, prefix) == predict_total_time(b, prefix));
    }
}

TEST_CASE("default learner sets") {
    CHECK(default_learners(KpiKind::TotalTime).size() == 12);
    CHECK(default_learners(KpiKind::ActivityOccurrence).size() == 4);
}

TEST_SUITE_END();
