#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ppmkit/event_log.hpp"

namespace ppm {

enum class EncodingKind { Sequential, Aggregated };

/// One trace turned into a predictor-consumable instance. Sequential
/// instances carry a single-line object-literal string; aggregated instances
/// carry an ordered column -> value row.
struct EncodedInstance {
    EncodingKind kind = EncodingKind::Sequential;
    std::string payload;  // sequential only
    std::vector<std::pair<std::string, AttributeValue>> row;  // aggregated only
    bool is_running = false;
    std::string case_id;
};

/// Python-repr style number rendering: integral values keep one decimal
/// ("5000.0"), fractional values render shortest round-trip.
std::string render_number(double value);

/// String form of the KPI key for a schema ("total_time" or "occurrence").
std::string kpi_key(const LogSchema& schema);

/// Sequential encoding: global attributes in schema order, then
/// "ActTimeSeq" as [activity, cumulative elapsed minutes] pairs anchored at
/// each event's end, then the KPI key for completed traces. Running traces
/// end the sequence with ["Running"] and omit the KPI key. Local attributes
/// are never emitted.
EncodedInstance encode_seq(const Trace& trace, const LogSchema& schema, bool running);

struct DecodedSequential {
    std::vector<std::pair<std::string, AttributeValue>> global_attrs;
    std::vector<std::pair<std::string, Minutes>> act_time_seq;
    bool is_running = false;
    std::optional<Minutes> total_time;
    std::optional<bool> occurrence;
    /// Set when the payload wraps the object as {"<case_id>": {...}}.
    std::optional<std::string> case_id;
};

/// Inverse of encode_seq. Accepts both bare payloads and the case-keyed
/// wrapper used when presenting a running trace. Parse errors report the
/// byte offset.
DecodedSequential decode_seq(std::string_view payload);

/// Rebuilds a trace equivalent to the encoded one: same activities, same
/// cumulative elapsed values, same global attributes. Event starts are
/// chained so every derived representation (counts, elapsed sequences,
/// total time) matches the original.
Trace trace_from_decoded(const DecodedSequential& decoded, const LogSchema& schema);

/// Aggregated-history encoding: one row with global attribute columns, one
/// act_count_<activity> column per alphabet entry (occurrence counts in the
/// trace), an act_count_OTHER column for activities outside the alphabet,
/// and the KPI column for completed traces.
EncodedInstance encode_aggr(const Trace& trace, const LogSchema& schema,
                            const std::vector<std::string>& alphabet, bool running = false);

/// One row per instance; all instances must share the same columns.
void write_aggregated_csv(const std::vector<EncodedInstance>& instances, const std::string& path);

}  // namespace ppm
