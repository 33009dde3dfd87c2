#include <doctest.h>

#include <algorithm>

#include "ppmkit/trace_encoding.hpp"
#include "support/fixtures.hpp"

using namespace ppm;
using namespace ppm::testing;

TEST_SUITE_BEGIN("trace_encoding");

TEST_CASE("sequential encoding matches the reference strings byte for byte") {
    LogSchema schema = loan_schema();
    CHECK(encode_seq(loan_trace_5000(), schema, false).payload == kLoanPayload5000);
    CHECK(encode_seq(loan_trace_15000(), schema, false).payload == kLoanPayload15000);
    CHECK(encode_seq(loan_trace_running(), schema, true).payload == kLoanPayloadRunning);
}

TEST_CASE("running instances omit the KPI key and end with Running") {
    LogSchema schema = loan_schema();
    EncodedInstance instance = encode_seq(loan_trace_running(), schema, true);
    CHECK(instance.is_running);
    CHECK(instance.payload.find("total_time") == std::string::npos);
    CHECK(instance.payload.rfind(", [\"Running\"]]}") != std::string::npos);
}

TEST_CASE("single zero-duration event") {
    LogSchema schema = loan_schema();
    Trace trace{"c", {loan_event("A", 500, 500, 2.0)}};
    EncodedInstance instance = encode_seq(trace, schema, false);
    CHECK(instance.payload ==
          "{\"AMOUNT_REQ\": 2.0, \"ActTimeSeq\": [[\"A\", 0]], \"total_time\": \"0\"}");
}

TEST_CASE("empty trace cannot be encoded") {
    CHECK_THROWS_AS(encode_seq(Trace{"c", {}}, loan_schema(), false), Error);
}

TEST_CASE("number rendering") {
    CHECK(render_number(5000.0) == "5000.0");
    CHECK(render_number(0.0) == "0.0");
    CHECK(render_number(-3.0) == "-3.0");
    CHECK(render_number(1234.5) == "1234.5");
    CHECK(render_number(0.25) == "0.25");
}

TEST_CASE("decode_seq") {
    SUBCASE("reference payload decodes to its parts") {
        DecodedSequential decoded = decode_seq(kLoanPayload5000);
        REQUIRE(decoded.global_attrs.size() == 1);
        CHECK(decoded.global_attrs[0].first == "AMOUNT_REQ");
        CHECK(std::get<double>(decoded.global_attrs[0].second) == 5000.0);
        REQUIRE(decoded.act_time_seq.size() == 3);
        CHECK(decoded.act_time_seq[2].first == "W_Nabellen offertes");
        CHECK(decoded.act_time_seq[2].second == 7486);
        CHECK(decoded.total_time == 7486);
        CHECK_FALSE(decoded.is_running);
    }
    SUBCASE("running payload with case wrapper") {
        std::string wrapped = std::string("{\"Application_1000386745\": ") + kLoanPayloadRunning + "}";
        DecodedSequential decoded = decode_seq(wrapped);
        CHECK(decoded.case_id == "Application_1000386745");
        CHECK(decoded.is_running);
        CHECK_FALSE(decoded.total_time.has_value());
        REQUIRE(decoded.act_time_seq.size() == 2);
        CHECK(decoded.act_time_seq[1].second == 8571);
    }
    SUBCASE("missing ActTimeSeq is a parse error") {
        CHECK_THROWS_WITH_AS(decode_seq("{\"AMOUNT_REQ\": 5.0}"),
                             doctest::Contains("missing ActTimeSeq"), Error);
    }
    SUBCASE("parse errors report the offset") {
        CHECK_THROWS_WITH_AS(decode_seq("{\"ActTimeSeq\": [[\"A\" 5]]}"),
                             doctest::Contains("payload offset"), Error);
    }
    SUBCASE("Running anywhere but last is rejected") {
        CHECK_THROWS_AS(decode_seq("{\"ActTimeSeq\": [[\"Running\"], [\"A\", 5]]}"), Error);
    }
}

TEST_CASE("decode inverts encode on random traces") {
    Rng rng = make_rng(41);
    LogSchema schema = random_log_schema();
    for (int trial = 0; trial < 200; ++trial) {
        EventLog log = random_log(rng, schema, {.n_traces = 1, .min_events = 1, .max_events = 9});
        const Trace& trace = log.traces[0];
        bool running = bounded(rng, 2) == 1;
        EncodedInstance instance = encode_seq(trace, schema, running);
        DecodedSequential decoded = decode_seq(instance.payload);

        CHECK(decoded.is_running == running);
        REQUIRE(decoded.act_time_seq.size() == trace.size());
        auto elapsed = trace.cumulative_elapsed();
        for (std::size_t i = 0; i < trace.size(); ++i) {
            CHECK(decoded.act_time_seq[i].first == trace.events[i].activity);
            CHECK(decoded.act_time_seq[i].second == elapsed[i]);
        }
        if (!running) CHECK(decoded.total_time == total_time_minutes(trace));

        // Rebuilding a trace preserves every derived representation.
        Trace rebuilt = trace_from_decoded(decoded, schema);
        CHECK(rebuilt.activities() == trace.activities());
        CHECK(rebuilt.cumulative_elapsed() == elapsed);
    }
}

TEST_CASE("local attributes load but are never encoded") {
    LogSchema schema;
    schema.attributes = {
        {"AMOUNT_REQ", AttrType::Numeric, AttrScope::Global, ""},
        {"resource", AttrType::Categorical, AttrScope::Local, ""},
    };
    schema.kpi = KpiKind::TotalTime;
    std::string csv =
        "case_id,activity,start_ts,end_ts,AMOUNT_REQ,resource\n"
        "c1,Register,2024-01-01T10:00Z,2024-01-01T10:30Z,5000,alice\n"
        "c1,Close,2024-01-01T11:00Z,2024-01-01T12:00Z,5000,bob\n";  // local value varies
    EventLog log = load_csv_text(csv, schema);
    REQUIRE(log.size() == 1);
    CHECK(log.traces[0].events[0].attr("resource") != nullptr);

    std::string payload = encode_seq(log.traces[0], schema, false).payload;
    CHECK(payload.find("resource") == std::string::npos);
    CHECK(payload.find("alice") == std::string::npos);
    CHECK(payload.find("AMOUNT_REQ") != std::string::npos);
}

TEST_CASE("decode never crashes on mutated payloads") {
    Rng rng = make_rng(44);
    std::string base = kLoanPayload5000;
    for (int trial = 0; trial < 500; ++trial) {
        std::string mutated = base;
        switch (bounded(rng, 3)) {
            case 0:
                mutated = base.substr(0, bounded(rng, base.size()));
                break;
            case 1:
                mutated[bounded(rng, mutated.size())] =
                    static_cast<char>(32 + bounded(rng, 95));
                break;
            default:
                mutated.erase(bounded(rng, mutated.size()), 1 + bounded(rng, 5));
                break;
        }
        try {
            decode_seq(mutated);  // a mutation may still be well-formed
        } catch (const Error&) {
            // structured parse error: expected for most mutations
        }
    }
}

TEST_CASE("cumulative elapsed values are non-decreasing and end at total time") {
    Rng rng = make_rng(42);
    LogSchema schema = random_log_schema();
    for (int trial = 0; trial < 100; ++trial) {
        EventLog log = random_log(rng, schema, {.n_traces = 1, .min_events = 2, .max_events = 8});
        auto elapsed = log.traces[0].cumulative_elapsed();
        CHECK(std::is_sorted(elapsed.begin(), elapsed.end()));
        CHECK(elapsed.back() == total_time_minutes(log.traces[0]));
    }
}

TEST_CASE("encoding is injective on differing traces") {
    LogSchema schema = loan_schema();
    Trace a = loan_trace_5000();
    Trace b = loan_trace_5000();
    b.events[1].activity = "W_Validate application";
    Trace c = loan_trace_5000();
    c.events[0].attrs[0].second = 5001.0;
    CHECK(encode_seq(a, schema, false).payload != encode_seq(b, schema, false).payload);
    CHECK(encode_seq(a, schema, false).payload != encode_seq(c, schema, false).payload);
}

TEST_CASE("aggregated encoding") {
    LogSchema schema = loan_schema();
    std::vector<std::string> alphabet = {"A", "B", "C"};
    Trace trace{"c",
                {loan_event("A", 0, 1, 1.0), loan_event("B", 2, 3, 1.0),
                 loan_event("A", 4, 5, 1.0)}};

    SUBCASE("counts per activity") {
        EncodedInstance instance = encode_aggr(trace, schema, alphabet, false);
        auto get = [&](const std::string& column) {
            for (const auto& [name, value] : instance.row) {
                if (name == column) return std::get<double>(value);
            }
            FAIL("missing column ", column);
            return 0.0;
        };
        CHECK(get("act_count_A") == 2);
        CHECK(get("act_count_B") == 1);
        CHECK(get("act_count_C") == 0);
        CHECK(get("act_count_OTHER") == 0);
        CHECK(get("total_time") == 5);
    }
    SUBCASE("out-of-alphabet activities land in OTHER") {
        Trace other{"c", {loan_event("Z", 0, 1, 1.0)}};
        EncodedInstance instance = encode_aggr(other, schema, alphabet, false);
        for (const auto& [name, value] : instance.row) {
            if (name == "act_count_OTHER") CHECK(std::get<double>(value) == 1);
        }
    }
    SUBCASE("count columns sum to the trace length") {
        Rng rng = make_rng(43);
        LogSchema rl_schema = random_log_schema();
        for (int trial = 0; trial < 100; ++trial) {
            EventLog log = random_log(rng, rl_schema, {.n_traces = 1, .max_events = 9});
            std::vector<std::string> ab = {"Act_0", "Act_1", "Act_2"};
            EncodedInstance instance = encode_aggr(log.traces[0], rl_schema, ab, true);
            double sum = 0;
            for (const auto& [name, value] : instance.row) {
                if (name.rfind("act_count_", 0) == 0) sum += std::get<double>(value);
            }
            CHECK(sum == static_cast<double>(log.traces[0].size()));
        }
    }
    SUBCASE("permuting the activities leaves the count columns unchanged") {
        Trace permuted{"c",
                       {loan_event("B", 0, 1, 1.0), loan_event("A", 2, 3, 1.0),
                        loan_event("A", 4, 5, 1.0)}};
        EncodedInstance lhs = encode_aggr(trace, schema, alphabet, true);
        EncodedInstance rhs = encode_aggr(permuted, schema, alphabet, true);
        REQUIRE(lhs.row.size() == rhs.row.size());
        for (std::size_t i = 0; i < lhs.row.size(); ++i) {
            if (lhs.row[i].first.rfind("act_count_", 0) == 0) {
                CHECK(lhs.row[i].first == rhs.row[i].first);
                CHECK(std::get<double>(lhs.row[i].second) == std::get<double>(rhs.row[i].second));
            }
        }
    }
}

TEST_SUITE_END();
