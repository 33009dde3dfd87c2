#pragma once

// Shared fixtures: the loan-application reference traces with their exact
// encoded strings, a reference LLM reply, and random-log generators for
// property tests.

#include <string>
#include <vector>

#include "ppmkit/event_log.hpp"
#include "ppmkit/rng.hpp"

namespace ppm::testing {

inline LogSchema loan_schema() {
    LogSchema schema;
    schema.attributes = {{"AMOUNT_REQ", AttrType::Numeric, AttrScope::Global,
                          "representing the total amount of euros requested in the loan "
                          "application."}};
    schema.kpi = KpiKind::TotalTime;
    schema.domain_background =
        "The process deals with a loan application process from a Dutch financial institution. "
        "It has been provided\nin the Business Process Intelligence (BPI) challenge in 2012.";
    return schema;
}

inline Event loan_event(const std::string& activity, Minutes start, Minutes end, double amount) {
    Event event;
    event.activity = activity;
    event.t_start = start;
    event.t_end = end;
    event.attrs = {{"AMOUNT_REQ", AttributeValue{amount}}};
    return event;
}

/// Completed trace encoding to
/// {"AMOUNT_REQ": 5000.0, "ActTimeSeq": [["W_Completeren aanvraag", 11],
///  ["W_Nabellen offertes", 1464], ["W_Nabellen offertes", 7486]],
///  "total_time": "7486"}
inline Trace loan_trace_5000() {
    Trace trace;
    trace.case_id = "Application_5000";
    trace.events = {
        loan_event("W_Completeren aanvraag", 0, 11, 5000.0),
        loan_event("W_Nabellen offertes", 30, 1464, 5000.0),
        loan_event("W_Nabellen offertes", 1500, 7486, 5000.0),
    };
    return trace;
}

inline Trace loan_trace_15000() {
    Trace trace;
    trace.case_id = "Application_15000";
    trace.events = {
        loan_event("W_Completeren aanvraag", 0, 13, 15000.0),
        loan_event("W_Nabellen offertes", 13, 14, 15000.0),
        loan_event("W_Validate application", 100, 4328, 15000.0),
        loan_event("W_Validate application", 4400, 8792, 15000.0),
    };
    return trace;
}

/// Running prefix encoding to
/// {"AMOUNT_REQ": 18000.0, "ActTimeSeq": [["W_Completeren aanvraag", 2],
///  ["W_Nabellen offertes", 8571], ["Running"]]}
inline Trace loan_trace_running() {
    Trace trace;
    trace.case_id = "Application_1000386745";
    trace.events = {
        loan_event("W_Completeren aanvraag", 0, 2, 18000.0),
        loan_event("W_Nabellen offertes", 10, 8571, 18000.0),
    };
    return trace;
}

inline const char* kLoanPayload5000 =
    "{\"AMOUNT_REQ\": 5000.0, \"ActTimeSeq\": [[\"W_Completeren aanvraag\", 11], "
    "[\"W_Nabellen offertes\", 1464], [\"W_Nabellen offertes\", 7486]], \"total_time\": \"7486\"}";

inline const char* kLoanPayload15000 =
    "{\"AMOUNT_REQ\": 15000.0, \"ActTimeSeq\": [[\"W_Completeren aanvraag\", 13], "
    "[\"W_Nabellen offertes\", 14], [\"W_Validate application\", 4328], "
    "[\"W_Validate application\", 8792]], \"total_time\": \"8792\"}";

inline const char* kLoanPayloadRunning =
    "{\"AMOUNT_REQ\": 18000.0, \"ActTimeSeq\": [[\"W_Completeren aanvraag\", 2], "
    "[\"W_Nabellen offertes\", 8571], [\"Running\"]]}";

/// A reference reply in the expected marker format: attribute-range
/// filtering followed by a median, predicting 9713.
inline const char* kReferenceReply = R"([[ ## reasoning ## ]]
The new case is for an application with a 'AMOUNT_REQ' of 18000.  The process instance
has executed activities 'W_Completeren aanvraag' and 'W_Nabellen offertes'.
The process is currently 'Running'.
To predict the total time, we will look at historical cases with similar characteristics.

1. Filter for similar Application Type and Requested Amount:
   We focus on cases with 'AMOUNT_REQ'
   in a range around 18000.0 (e.g., 10000.0 to 25000.0) to find comparable instances.

2. Identify relevant historical cases:
   From the provided log, we select the cases that match 'AMOUNT_REQ' within the range of 10000.0 to 25000.0.
   We list their total times:
   10000.0: 9713, 10000.0: 18803, 11500.0: 4771, 12000.0: 18924, 12000.0: 8102,
   13000.0: 6645, 13000.0: 21550, 14000.0: 9713, 15000.0: 8049, 15000.0: 17011

3. Calculate the median total time:
   To get a robust estimate and reduce the impact of outliers, we calculate the median of these total times.
   Sorted total times: 4771, 5299, 5975, 5975, 6645, 6645, 7432, 8049, 8102, 9713, 9713,
   12991, 13056, 17011, 17434, 18803, 18924, 19826, 21550, 71762.
   71762 is detected as an outlier and it will be removed from the analysis.
   Since there are 19 values, the median is the 10th value,
   which is 9713. Median = 9713.

4. Predict total time:
   We use the median total time of the similar historical cases as our prediction
   for the new running case.

[[ ## answer ## ]]
9713
[[ ## completed ## ]]
)";

// ---------------------------------------------------------------------------
// Random-log generation for property tests.

struct RandomLogOptions {
    std::size_t n_traces = 10;
    std::size_t min_events = 1;
    std::size_t max_events = 8;
    std::size_t n_activities = 6;
    bool overlapping_cases = true;
};

inline LogSchema random_log_schema(KpiKind kpi = KpiKind::TotalTime) {
    LogSchema schema;
    schema.attributes = {
        {"amount", AttrType::Numeric, AttrScope::Global, "representing the requested amount."},
        {"channel", AttrType::Categorical, AttrScope::Global, "representing the intake channel."},
    };
    schema.kpi = kpi;
    if (kpi == KpiKind::ActivityOccurrence) schema.target_activity = "Act_0";
    return schema;
}

/// Traces with end-anchored, non-decreasing completion times per trace and
/// start times spread over a horizon so temporal splits are non-trivial.
inline EventLog random_log(Rng& rng, const LogSchema& schema, const RandomLogOptions& options) {
    static const char* kChannels[] = {"online", "branch", "broker"};
    EventLog log;
    log.schema = schema;
    for (std::size_t t = 0; t < options.n_traces; ++t) {
        Trace trace;
        trace.case_id = "case_" + std::to_string(t);
        double amount = 1000.0 + static_cast<double>(bounded(rng, 200)) * 100.0;
        std::string channel = kChannels[bounded(rng, 3)];

        Minutes start = options.overlapping_cases
                            ? static_cast<Minutes>(bounded(rng, 5000))
                            : static_cast<Minutes>(t * 1000);
        std::size_t n_events =
            options.min_events + bounded(rng, options.max_events - options.min_events + 1);
        Minutes prev_end = start;
        Minutes next_start = start;
        for (std::size_t e = 0; e < n_events; ++e) {
            Event event;
            event.activity = "Act_" + std::to_string(bounded(rng, options.n_activities));
            event.t_start = next_start;
            event.t_end = std::max(prev_end, event.t_start + static_cast<Minutes>(bounded(rng, 400)));
            event.attrs = {{"amount", AttributeValue{amount}},
                           {"channel", AttributeValue{channel}}};
            prev_end = event.t_end;
            next_start = event.t_start + 1 + static_cast<Minutes>(bounded(rng, 300));
            trace.events.push_back(std::move(event));
        }
        log.traces.push_back(std::move(trace));
    }
    return log;
}

}  // namespace ppm::testing
