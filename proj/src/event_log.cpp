#include "ppmkit/event_log.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ppmkit/csv.hpp"

namespace ppm {

bool attribute_equal(const AttributeValue& a, const AttributeValue& b) {
    return a == b;
}

const AttributeDecl* LogSchema::find(const std::string& name) const {
    for (const auto& attr : attributes) {
        if (attr.name == name) return &attr;
    }
    return nullptr;
}

std::vector<const AttributeDecl*> LogSchema::global_attributes() const {
    std::vector<const AttributeDecl*> out;
    for (const auto& attr : attributes) {
        if (attr.scope == AttrScope::Global) out.push_back(&attr);
    }
    return out;
}

void LogSchema::validate() const {
    std::set<std::string> seen;
    for (const auto& attr : attributes) {
        if (attr.name.empty()) raise(ErrorKind::Schema, "schema attribute with empty name");
        if (!seen.insert(attr.name).second) {
            raise(ErrorKind::Schema, "duplicate schema attribute '", attr.name, "'");
        }
    }
    if (kpi == KpiKind::ActivityOccurrence && !target_activity) {
        raise(ErrorKind::Schema, "kpi 'activity_occurrence' requires a target_activity");
    }
    if (kpi == KpiKind::TotalTime && target_activity) {
        raise(ErrorKind::Schema, "target_activity is only valid with kpi 'activity_occurrence'");
    }
}

const AttributeValue* Event::attr(const std::string& name) const {
    for (const auto& [key, value] : attrs) {
        if (key == name) return &value;
    }
    return nullptr;
}

Minutes Trace::start_time() const {
    if (events.empty()) raise(ErrorKind::InvalidArgument, "empty trace '", case_id, "'");
    return events.front().t_start;
}

Minutes Trace::completion_time() const {
    if (events.empty()) raise(ErrorKind::InvalidArgument, "empty trace '", case_id, "'");
    Minutes latest = events.front().t_end;
    for (const auto& e : events) latest = std::max(latest, e.t_end);
    return latest;
}

std::vector<Minutes> Trace::cumulative_elapsed() const {
    std::vector<Minutes> out;
    out.reserve(events.size());
    if (events.empty()) return out;
    Minutes origin = events.front().t_start;
    for (const auto& e : events) out.push_back(e.t_end - origin);
    return out;
}

std::vector<std::string> Trace::activities() const {
    std::vector<std::string> out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(e.activity);
    return out;
}

bool Trace::contains_activity(const std::string& activity) const {
    for (const auto& e : events) {
        if (e.activity == activity) return true;
    }
    return false;
}

std::vector<std::pair<std::string, AttributeValue>> Trace::global_values(const LogSchema& schema) const {
    std::vector<std::pair<std::string, AttributeValue>> out;
    if (events.empty()) return out;
    for (const auto* decl : schema.global_attributes()) {
        if (const AttributeValue* v = events.front().attr(decl->name)) {
            out.emplace_back(decl->name, *v);
        }
    }
    return out;
}

void sort_events(Trace& trace) {
    std::stable_sort(trace.events.begin(), trace.events.end(),
                     [](const Event& a, const Event& b) {
                         if (a.t_start != b.t_start) return a.t_start < b.t_start;
                         if (a.t_end != b.t_end) return a.t_end < b.t_end;
                         return a.activity < b.activity;
                     });
}

std::vector<std::string> EventLog::activity_alphabet() const {
    std::set<std::string> names;
    for (const auto& trace : traces) {
        for (const auto& e : trace.events) names.insert(e.activity);
    }
    return {names.begin(), names.end()};
}

const Trace* EventLog::find_case(const std::string& case_id) const {
    for (const auto& trace : traces) {
        if (trace.case_id == case_id) return &trace;
    }
    return nullptr;
}

namespace {

AttributeValue parse_attribute(const std::string& raw, const AttributeDecl& decl,
                               const std::string& origin, std::size_t row) {
    if (decl.type == AttrType::Categorical) return raw;
    double value = 0;
    const char* first = raw.data();
    const char* last = raw.data() + raw.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        raise(ErrorKind::Parse, origin, ": row ", row, ": attribute '", decl.name,
              "' expects a number, got '", raw, "'");
    }
    return value;
}

}  // namespace

EventLog load_csv_text(std::string_view text, const LogSchema& schema, const std::string& origin) {
    schema.validate();
    CsvTable table = read_csv_text(text, origin);

    int col_case = table.column("case_id");
    int col_activity = table.column("activity");
    int col_start = table.column("start_ts");
    int col_end = table.column("end_ts");  // optional: single-timestamp logs
    for (auto [col, name] : {std::pair{col_case, "case_id"},
                             std::pair{col_activity, "activity"},
                             std::pair{col_start, "start_ts"}}) {
        if (col < 0) raise(ErrorKind::Schema, origin, ": row 1: missing required column '", name, "'");
    }

    std::vector<int> attr_cols;
    for (const auto& attr : schema.attributes) {
        int col = table.column(attr.name);
        if (col < 0) {
            raise(ErrorKind::Schema, origin, ": row 1: missing column for schema attribute '",
                  attr.name, "'");
        }
        attr_cols.push_back(col);
    }
    // Any column not accounted for is a schema mismatch.
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        const std::string& name = table.header[c];
        if (name == "case_id" || name == "activity" || name == "start_ts" || name == "end_ts") continue;
        if (!schema.find(name)) {
            raise(ErrorKind::Schema, origin, ": row 1: unknown attribute column '", name, "'");
        }
    }

    EventLog log;
    log.schema = schema;
    std::map<std::string, std::size_t> trace_index;

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        std::size_t row_no = r + 2;  // header is row 1

        Event event;
        event.activity = row[col_activity];
        event.t_start = parse_iso8601_minutes(row[col_start]);
        event.t_end = col_end >= 0 ? parse_iso8601_minutes(row[col_end]) : event.t_start;
        if (event.t_end < event.t_start) {
            raise(ErrorKind::Schema, origin, ": row ", row_no, ": event ends before it starts");
        }
        for (std::size_t a = 0; a < schema.attributes.size(); ++a) {
            event.attrs.emplace_back(
                schema.attributes[a].name,
                parse_attribute(row[attr_cols[a]], schema.attributes[a], origin, row_no));
        }

        const std::string& case_id = row[col_case];
        auto [it, inserted] = trace_index.try_emplace(case_id, log.traces.size());
        if (inserted) {
            log.traces.push_back(Trace{case_id, {}});
        } else {
            // Global attributes must be constant within a case.
            const Event& first = log.traces[it->second].events.front();
            for (const auto* decl : schema.global_attributes()) {
                const AttributeValue* prev = first.attr(decl->name);
                const AttributeValue* cur = event.attr(decl->name);
                if (prev && cur && !attribute_equal(*prev, *cur)) {
                    raise(ErrorKind::Schema, origin, ": row ", row_no, ": global attribute '",
                          decl->name, "' changes within case '", case_id, "'");
                }
            }
        }
        log.traces[it->second].events.push_back(std::move(event));
    }

    for (auto& trace : log.traces) sort_events(trace);
    return log;
}

EventLog load_csv(const std::string& path, const LogSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Io, "cannot open '", path, "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_csv_text(buf.str(), schema, path);
}

void write_csv(const EventLog& log, const std::string& path) {
    std::vector<std::string> header = {"case_id", "activity", "start_ts", "end_ts"};
    for (const auto& attr : log.schema.attributes) header.push_back(attr.name);

    std::vector<std::vector<std::string>> rows;
    for (const auto& trace : log.traces) {
        for (const auto& e : trace.events) {
            std::vector<std::string> row = {trace.case_id, e.activity,
                                            format_iso8601_minutes(e.t_start),
                                            format_iso8601_minutes(e.t_end)};
            for (const auto& attr : log.schema.attributes) {
                const AttributeValue* v = e.attr(attr.name);
                if (!v) {
                    row.emplace_back();
                } else if (std::holds_alternative<double>(*v)) {
                    char buf[64];
                    std::snprintf(buf, sizeof(buf), "%.12g", std::get<double>(*v));
                    row.emplace_back(buf);
                } else {
                    row.push_back(std::get<std::string>(*v));
                }
            }
            rows.push_back(std::move(row));
        }
    }
    write_csv_file(path, header, rows);
}

std::vector<Trace> prefixes(const Trace& trace) {
    std::vector<Trace> out;
    out.reserve(trace.events.size() + 1);
    for (std::size_t len = 0; len <= trace.events.size(); ++len) {
        Trace prefix;
        prefix.case_id = trace.case_id;
        prefix.events.assign(trace.events.begin(), trace.events.begin() + len);
        out.push_back(std::move(prefix));
    }
    return out;
}

Minutes total_time_minutes(const Trace& trace) {
    if (trace.empty()) raise(ErrorKind::InvalidArgument, "kpi of empty trace '", trace.case_id, "'");
    return trace.events.back().t_end - trace.events.front().t_start;
}

bool activity_occurs(const Trace& trace, const std::string& target) {
    return trace.contains_activity(target);
}

KpiValue kpi_value(const Trace& trace, const LogSchema& schema) {
    if (trace.empty()) raise(ErrorKind::InvalidArgument, "kpi of empty trace '", trace.case_id, "'");
    if (schema.kpi == KpiKind::TotalTime) return total_time_minutes(trace);
    return activity_occurs(trace, *schema.target_activity);
}

double kpi_as_double(const KpiValue& value) {
    if (std::holds_alternative<Minutes>(value)) {
        return static_cast<double>(std::get<Minutes>(value));
    }
    return std::get<bool>(value) ? 1.0 : 0.0;
}

}  // namespace ppm
