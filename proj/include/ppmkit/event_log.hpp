#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ppmkit/error.hpp"
#include "ppmkit/time_utils.hpp"

namespace ppm {

enum class AttrType { Numeric, Categorical };
enum class AttrScope { Global, Local };
enum class KpiKind { TotalTime, ActivityOccurrence };

using AttributeValue = std::variant<double, std::string>;

bool attribute_equal(const AttributeValue& a, const AttributeValue& b);

struct AttributeDecl {
    std::string name;
    AttrType type = AttrType::Categorical;
    AttrScope scope = AttrScope::Global;
    /// Analyst-provided free text, rendered in the prompt's attribute bullet.
    std::string description;
};

/// Declares the attribute columns of a log plus the prediction target.
struct LogSchema {
    std::vector<AttributeDecl> attributes;
    KpiKind kpi = KpiKind::TotalTime;
    std::optional<std::string> target_activity;  // required iff kpi == ActivityOccurrence
    /// Analyst-provided process description, rendered as its own prompt section.
    std::string domain_background;

    const AttributeDecl* find(const std::string& name) const;
    std::vector<const AttributeDecl*> global_attributes() const;
    void validate() const;
};

struct Event {
    std::string activity;
    Minutes t_start = 0;
    Minutes t_end = 0;
    /// One entry per schema attribute, in schema order.
    std::vector<std::pair<std::string, AttributeValue>> attrs;

    const AttributeValue* attr(const std::string& name) const;
};

struct Trace {
    std::string case_id;
    std::vector<Event> events;

    bool empty() const { return events.empty(); }
    std::size_t size() const { return events.size(); }

    Minutes start_time() const;       // t_start of the first event
    Minutes completion_time() const;  // latest t_end over all events

    /// Minutes from trace start to the end of each event, one per event.
    std::vector<Minutes> cumulative_elapsed() const;
    std::vector<std::string> activities() const;
    bool contains_activity(const std::string& activity) const;

    /// Values of the global attributes, taken from the first event.
    std::vector<std::pair<std::string, AttributeValue>> global_values(const LogSchema& schema) const;
};

/// Sorts events by (t_start, t_end, activity), stable.
void sort_events(Trace& trace);

struct EventLog {
    LogSchema schema;
    std::vector<Trace> traces;  // multiset: duplicate traces are preserved

    bool empty() const { return traces.empty(); }
    std::size_t size() const { return traces.size(); }

    /// Sorted distinct activity names across all traces.
    std::vector<std::string> activity_alphabet() const;
    const Trace* find_case(const std::string& case_id) const;
};

/// Loads a CSV with header columns case_id, activity, start_ts, end_ts plus
/// one column per schema attribute. end_ts may be omitted for
/// single-timestamp logs, in which case t_end = t_start. Timestamps are
/// ISO-8601, normalized to UTC minutes. Rows are grouped by case_id (trace
/// order follows first appearance) and events sorted per the trace ordering
/// rule. Errors report the offending row (header = row 1).
EventLog load_csv(const std::string& path, const LogSchema& schema);
EventLog load_csv_text(std::string_view text, const LogSchema& schema,
                       const std::string& origin = "<memory>");

void write_csv(const EventLog& log, const std::string& path);

/// All prefixes of the trace in length order: empty, first event, ...,
/// the whole trace. Every prefix shares the trace's case_id.
std::vector<Trace> prefixes(const Trace& trace);

using KpiValue = std::variant<Minutes, bool>;

/// Minutes from the first event's start to the last event's end.
Minutes total_time_minutes(const Trace& trace);
bool activity_occurs(const Trace& trace, const std::string& target);

/// KPI of a completed trace: total time in minutes, or whether the schema's
/// target activity occurs anywhere in it.
KpiValue kpi_value(const Trace& trace, const LogSchema& schema);

/// KPI as a double (occurrence mapped to 1/0), the form metrics consume.
double kpi_as_double(const KpiValue& value);

}  // namespace ppm
