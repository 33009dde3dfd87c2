#include "ppmkit/trace_encoding.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "ppmkit/csv.hpp"

namespace ppm {

std::string render_number(double value) {
    if (std::isfinite(value) && value == std::floor(value) && std::fabs(value) < 1e15) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.1f", value);
        return buf;
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

std::string kpi_key(const LogSchema& schema) {
    return schema.kpi == KpiKind::TotalTime ? "total_time" : "occurrence";
}

namespace {

std::string quote(std::string_view text) {
    std::string out = "\"";
    for (char c : text) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string render_attribute(const AttributeValue& value) {
    if (std::holds_alternative<double>(value)) return render_number(std::get<double>(value));
    return quote(std::get<std::string>(value));
}

}  // namespace

EncodedInstance encode_seq(const Trace& trace, const LogSchema& schema, bool running) {
    if (trace.empty()) raise(ErrorKind::InvalidArgument, "cannot encode empty trace '", trace.case_id, "'");

    std::string payload = "{";
    for (const auto& [name, value] : trace.global_values(schema)) {
        payload += quote(name);
        payload += ": ";
        payload += render_attribute(value);
        payload += ", ";
    }

    payload += "\"ActTimeSeq\": [";
    auto elapsed = trace.cumulative_elapsed();
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
        if (i) payload += ", ";
        payload += "[";
        payload += quote(trace.events[i].activity);
        payload += ", ";
        payload += std::to_string(elapsed[i]);
        payload += "]";
    }
    if (running) payload += ", [\"Running\"]";
    payload += "]";

    if (!running) {
        payload += ", ";
        payload += quote(kpi_key(schema));
        payload += ": ";
        if (schema.kpi == KpiKind::TotalTime) {
            payload += quote(std::to_string(total_time_minutes(trace)));
        } else {
            payload += quote(activity_occurs(trace, *schema.target_activity) ? "yes" : "no");
        }
    }
    payload += "}";

    EncodedInstance instance;
    instance.kind = EncodingKind::Sequential;
    instance.payload = std::move(payload);
    instance.is_running = running;
    instance.case_id = trace.case_id;
    return instance;
}

namespace {

/// Recursive-descent parser for the sequential payload grammar.
class SeqParser {
public:
    explicit SeqParser(std::string_view text) : text_(text) {}

    DecodedSequential parse() {
        skip_ws();
        DecodedSequential decoded = parse_object(/*allow_wrapper=*/true);
        skip_ws();
        if (pos_ != text_.size()) fail("trailing characters after payload");
        return decoded;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) {
        raise(ErrorKind::Parse, "payload offset ", pos_, ": ", what);
    }

    void skip_ws() {
        while (pos_ < text_.size() &&
               (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r')) {
            ++pos_;
        }
    }

    char peek() { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void expect(char c) {
        if (peek() != c) fail(strcat("expected '", c, "'"));
        ++pos_;
    }

    std::string parse_string() {
        expect('"');
        std::string out;
        while (true) {
            if (pos_ >= text_.size()) fail("unterminated string");
            char c = text_[pos_++];
            if (c == '"') break;
            if (c == '\\') {
                if (pos_ >= text_.size()) fail("dangling escape");
                char esc = text_[pos_++];
                if (esc == '"' || esc == '\\') out.push_back(esc);
                else fail(strcat("unsupported escape '\\", esc, "'"));
            } else {
                out.push_back(c);
            }
        }
        return out;
    }

    double parse_number() {
        std::size_t start = pos_;
        if (peek() == '-' || peek() == '+') ++pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                text_[pos_] == 'e' || text_[pos_] == 'E' || text_[pos_] == '-' || text_[pos_] == '+')) {
            ++pos_;
        }
        double value = 0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (ec != std::errc() || ptr != text_.data() + pos_) {
            pos_ = start;
            fail("invalid number");
        }
        return value;
    }

    Minutes parse_integer() {
        std::size_t start = pos_;
        if (peek() == '-') ++pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        Minutes value = 0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (ec != std::errc() || ptr != text_.data() + pos_) {
            pos_ = start;
            fail("invalid integer");
        }
        return value;
    }

    void parse_act_time_seq(DecodedSequential& out) {
        expect('[');
        skip_ws();
        bool first = true;
        while (peek() != ']') {
            if (!first) {
                expect(',');
                skip_ws();
            }
            first = false;
            if (out.is_running) fail("[\"Running\"] must be the final entry");
            expect('[');
            skip_ws();
            std::string activity = parse_string();
            skip_ws();
            if (peek() == ']') {
                if (activity != "Running") fail("single-element entry must be [\"Running\"]");
                out.is_running = true;
                ++pos_;
            } else {
                expect(',');
                skip_ws();
                Minutes elapsed = parse_integer();
                skip_ws();
                expect(']');
                out.act_time_seq.emplace_back(std::move(activity), elapsed);
            }
            skip_ws();
        }
        ++pos_;  // ']'
    }

    DecodedSequential parse_object(bool allow_wrapper) {
        DecodedSequential out;
        expect('{');
        skip_ws();
        bool seen_act_time_seq = false;
        bool first = true;
        while (peek() != '}') {
            if (!first) {
                expect(',');
                skip_ws();
            }
            first = false;
            std::string key = parse_string();
            skip_ws();
            expect(':');
            skip_ws();

            if (allow_wrapper && peek() == '{') {
                // {"<case_id>": {...}} — a running trace keyed by case id.
                DecodedSequential inner = parse_object(/*allow_wrapper=*/false);
                inner.case_id = key;
                skip_ws();
                if (peek() != '}') fail("case-keyed wrapper must hold a single object");
                ++pos_;
                return inner;
            }

            if (key == "ActTimeSeq") {
                if (seen_act_time_seq) fail("duplicate ActTimeSeq key");
                seen_act_time_seq = true;
                parse_act_time_seq(out);
            } else if (key == "total_time") {
                std::string text = parse_string();
                Minutes value = 0;
                auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
                if (ec != std::errc() || ptr != text.data() + text.size()) {
                    fail(strcat("total_time must be an integer string, got '", text, "'"));
                }
                out.total_time = value;
            } else if (key == "occurrence") {
                std::string text = parse_string();
                if (text == "yes") out.occurrence = true;
                else if (text == "no") out.occurrence = false;
                else fail(strcat("occurrence must be \"yes\" or \"no\", got '", text, "'"));
            } else {
                // Global attribute: quoted string or number.
                if (peek() == '"') out.global_attrs.emplace_back(key, parse_string());
                else out.global_attrs.emplace_back(key, parse_number());
            }
            skip_ws();
            allow_wrapper = false;  // wrapper form only matches the very first key
        }
        ++pos_;  // '}'
        if (!seen_act_time_seq) fail("missing ActTimeSeq key");
        return out;
    }
};

}  // namespace

DecodedSequential decode_seq(std::string_view payload) {
    return SeqParser(payload).parse();
}

Trace trace_from_decoded(const DecodedSequential& decoded, const LogSchema& schema) {
    // Payload attribute order follows the schema's global attributes, so the
    // values can be mapped back positionally. This also holds for anonymized
    // payloads, where the attribute names themselves are hashed.
    auto globals = schema.global_attributes();
    std::vector<std::pair<std::string, AttributeValue>> attrs;
    if (decoded.global_attrs.size() == globals.size()) {
        for (std::size_t g = 0; g < globals.size(); ++g) {
            attrs.emplace_back(globals[g]->name, decoded.global_attrs[g].second);
        }
    } else {
        attrs = decoded.global_attrs;
    }

    Trace trace;
    trace.case_id = decoded.case_id.value_or("decoded");
    Minutes previous = 0;
    for (const auto& [activity, elapsed] : decoded.act_time_seq) {
        Event event;
        event.activity = activity;
        event.t_start = std::min(previous, elapsed);
        event.t_end = elapsed;
        event.attrs = attrs;
        trace.events.push_back(std::move(event));
        previous = elapsed;
    }
    return trace;
}

EncodedInstance encode_aggr(const Trace& trace, const LogSchema& schema,
                            const std::vector<std::string>& alphabet, bool running) {
    if (trace.empty()) raise(ErrorKind::InvalidArgument, "cannot encode empty trace '", trace.case_id, "'");

    EncodedInstance instance;
    instance.kind = EncodingKind::Aggregated;
    instance.is_running = running;
    instance.case_id = trace.case_id;

    for (const auto& [name, value] : trace.global_values(schema)) {
        instance.row.emplace_back(name, value);
    }

    std::vector<double> counts(alphabet.size(), 0.0);
    double other = 0.0;
    for (const auto& e : trace.events) {
        bool found = false;
        for (std::size_t i = 0; i < alphabet.size(); ++i) {
            if (alphabet[i] == e.activity) {
                counts[i] += 1.0;
                found = true;
                break;
            }
        }
        if (!found) other += 1.0;
    }
    for (std::size_t i = 0; i < alphabet.size(); ++i) {
        instance.row.emplace_back("act_count_" + alphabet[i], counts[i]);
    }
    instance.row.emplace_back("act_count_OTHER", other);

    if (!running) {
        if (schema.kpi == KpiKind::TotalTime) {
            instance.row.emplace_back(kpi_key(schema),
                                      static_cast<double>(total_time_minutes(trace)));
        } else {
            instance.row.emplace_back(kpi_key(schema),
                                      activity_occurs(trace, *schema.target_activity) ? 1.0 : 0.0);
        }
    }
    return instance;
}

void write_aggregated_csv(const std::vector<EncodedInstance>& instances, const std::string& path) {
    if (instances.empty()) raise(ErrorKind::InvalidArgument, "no instances to write");

    std::vector<std::string> header = {"case_id"};
    for (const auto& [name, value] : instances.front().row) header.push_back(name);

    std::vector<std::vector<std::string>> rows;
    for (const auto& instance : instances) {
        if (instance.kind != EncodingKind::Aggregated) {
            raise(ErrorKind::InvalidArgument, "instance '", instance.case_id, "' is not aggregated");
        }
        if (instance.row.size() + 1 != header.size()) {
            raise(ErrorKind::InvalidArgument, "instance '", instance.case_id,
                  "' has a different column set");
        }
        std::vector<std::string> row = {instance.case_id};
        for (std::size_t i = 0; i < instance.row.size(); ++i) {
            if (instance.row[i].first != header[i + 1]) {
                raise(ErrorKind::InvalidArgument, "instance '", instance.case_id,
                      "' has a different column set");
            }
            const AttributeValue& value = instance.row[i].second;
            if (std::holds_alternative<double>(value)) {
                double d = std::get<double>(value);
                if (d == std::floor(d) && std::fabs(d) < 1e15) {
                    row.push_back(std::to_string(static_cast<long long>(d)));
                } else {
                    char buf[64];
                    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), d);
                    (void)ec;
                    row.emplace_back(buf, ptr);
                }
            } else {
                row.push_back(std::get<std::string>(value));
            }
        }
        rows.push_back(std::move(row));
    }
    write_csv_file(path, header, rows);
}

}  // namespace ppm
