#include "ppmkit/prompt_engine.hpp"

#include <cctype>
#include <charconv>

namespace ppm {

const char* to_string(PromptSection section) {
    switch (section) {
        case PromptSection::Header: return "header";
        case PromptSection::AttributesEncoding: return "attributes_encoding";
        case PromptSection::OutputFormat: return "output_format";
        case PromptSection::RunningFormat: return "running_format";
        case PromptSection::DomainBackground: return "domain_background";
        case PromptSection::Examples: return "examples";
        case PromptSection::RunningTrace: return "running_trace";
    }
    return "?";
}

std::string PromptBundle::render() const {
    std::string out;
    for (const auto& [id, text] : sections) {
        if (text.empty()) continue;
        if (!out.empty()) out += "\n\n";
        out += text;
    }
    out += "\n";
    return out;
}

const std::string& PromptBundle::section_text(PromptSection section) const {
    for (const auto& [id, text] : sections) {
        if (id == section) return text;
    }
    raise(ErrorKind::InvalidArgument, "bundle is missing section ", to_string(section));
}

namespace {

struct KpiWording {
    std::string name;           // "total time" / "occurrence of activity 'X'"
    std::string answer_desc;    // "total time as an integer" / "... as yes or no"
    std::string examples_noun;  // "total times" / "occurrence values"
    std::string key_line;       // attribute-section bullet for the KPI key
};

KpiWording kpi_wording(const LogSchema& schema) {
    KpiWording w;
    if (schema.kpi == KpiKind::TotalTime) {
        w.name = "total time";
        w.answer_desc = "total time as an integer";
        w.examples_noun = "total times";
        w.key_line =
            "- The key \"total_time\", which value is the total execution time in minutes from "
            "the start of the activity,\nthat is the value to predict.";
    } else {
        const std::string& target = *schema.target_activity;
        w.name = "occurrence of activity '" + target + "'";
        w.answer_desc = w.name + " as yes or no";
        w.examples_noun = "occurrence values";
        w.key_line =
            "- The key \"occurrence\", which value is \"yes\" or \"no\" depending on whether the "
            "activity '" + target + "' occurs,\nthat is the value to predict.";
    }
    return w;
}

std::string header_text(const KpiWording& w) {
    return "You are an expert in process mining and machine learning. Your task is to predict "
           "the '" + w.name + "' of\nprocess instances based on event logs, as each process "
           "instance is a sequence of activities.";
}

std::string attributes_text(const LogSchema& schema, const KpiWording& w, bool hashed) {
    std::string text =
        "A event log is a collection of traces, where each trace represents a process instance.\n"
        "Each trace is mapped as a sequence of activities and integers representing the minutes "
        "since the start\nof the process.\n"
        "The log is represented as a python list containing one dictionary for each trace. "
        "Included in it are:\n";
    if (!hashed) {
        for (const auto* decl : schema.global_attributes()) {
            if (decl->description.empty()) continue;
            text += "- the key \"" + decl->name + "\", " + decl->description + "\n";
        }
    }
    text += "- the key \"ActTimeSeq\", which value is a list of [activity, cumulative elapsed "
            "minutes]\n";
    text += w.key_line;
    return text;
}

std::string output_format_text(const KpiWording& w) {
    return "All interactions will be structured in the following way, with the appropriate "
           "values filled in.\n\n"
           "[[ ## reasoning ## ]]\n{your step-by-step reasoning}\n\n"
           "[[ ## answer ## ]]\n{your predicted " + w.answer_desc + "}\n\n"
           "[[ ## completed ## ]]";
}

std::string running_format_text(const KpiWording& w) {
    return "In adhering to this structure, your objective is to analyze the event log, and apply "
           "reasoning to predict\nthe " + w.name + " for a new case. This case belongs to a "
           "not-yet-completed process instance, represented by the\nlabel \"Running\" in "
           "\"ActTimeSeq\", indicating that more activities are expected before reaching the "
           "conclusion\nof the process instance.\n\n"
           "Ensure to articulate each step of your thought process in the reasoning field, "
           "detailing how you identify\nrelationships with past cases and leverage your intuition "
           "about the meaning of activities to arrive at the\nsolution. The answer should be the "
           "final prediction of the " + w.name + " for the given process instance.\n"
           "Respond with the corresponding output fields, starting with the field "
           "[[ ## reasoning ## ]],\nthen [[ ## answer ## ]], and then ending with the marker for "
           "[[ ## completed ## ]].\n\n"
           "Your task is to learn from them and predict the '" + w.name + "' values for that "
           "traces.";
}

std::string examples_text(const std::vector<EncodedInstance>& train, std::size_t count,
                          const KpiWording& w) {
    std::string text = "The following list shows some completed example cases with their " +
                       w.examples_noun + ":\n";
    for (std::size_t i = 0; i < count; ++i) {
        text += "\n     " + train[i].payload;
    }
    return text;
}

std::string running_trace_text(const EncodedInstance& running, const KpiWording& w) {
    std::string quoted_case = "\"" + running.case_id + "\"";
    return "Now predict the " + w.name + " for this new uncompleted case, considering that the "
           "case is still running:\n\n    {" + quoted_case + ": " + running.payload + "}";
}

PromptBundle assemble(const std::vector<EncodedInstance>& train, std::size_t count,
                      const EncodedInstance& running, const LogSchema& schema, bool hashed) {
    KpiWording w = kpi_wording(schema);
    PromptBundle bundle;
    bundle.kpi = schema.kpi;
    bundle.hashed = hashed;
    bundle.sections = {
        {PromptSection::Header, header_text(w)},
        {PromptSection::AttributesEncoding, attributes_text(schema, w, hashed)},
        {PromptSection::OutputFormat, output_format_text(w)},
        {PromptSection::RunningFormat, running_format_text(w)},
        {PromptSection::DomainBackground, hashed ? std::string() : schema.domain_background},
        {PromptSection::Examples, examples_text(train, count, w)},
        {PromptSection::RunningTrace, running_trace_text(running, w)},
    };
    return bundle;
}

}  // namespace

PromptBundle build_prompt(const std::vector<EncodedInstance>& train,
                          const EncodedInstance& running, const LogSchema& schema, bool hashed,
                          std::size_t char_budget) {
    schema.validate();
    if (train.empty()) raise(ErrorKind::InvalidArgument, "cannot build a prompt without training instances");
    for (const auto& instance : train) {
        if (instance.is_running) {
            raise(ErrorKind::InvalidArgument, "training instance '", instance.case_id,
                  "' is marked running; only completed traces can serve as examples");
        }
    }
    if (!running.is_running) {
        raise(ErrorKind::InvalidArgument, "instance '", running.case_id,
              "' is not marked running");
    }

    std::size_t count = train.size();
    PromptBundle bundle = assemble(train, count, running, schema, hashed);
    if (char_budget > 0) {
        while (count > 1 && bundle.render().size() > char_budget) {
            --count;
            bundle = assemble(train, count, running, schema, hashed);
        }
        bundle.dropped_instances = train.size() - count;
    }
    return bundle;
}

namespace {

/// Locates "[[ ## <name> ## ]]" allowing arbitrary spacing inside the
/// brackets. Returns (begin, end) of the whole marker or npos.
std::pair<std::size_t, std::size_t> find_marker(const std::string& text, std::string_view name,
                                                std::size_t from) {
    for (std::size_t i = from; (i = text.find("[[", i)) != std::string::npos; ++i) {
        std::size_t p = i + 2;
        auto skip_ws = [&] {
            while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
        };
        auto expect = [&](std::string_view token) {
            if (text.compare(p, token.size(), token) != 0) return false;
            p += token.size();
            return true;
        };
        skip_ws();
        if (!expect("##")) continue;
        skip_ws();
        if (!expect(name)) continue;
        skip_ws();
        if (!expect("##")) continue;
        skip_ws();
        if (!expect("]]")) continue;
        return {i, p};
    }
    return {std::string::npos, std::string::npos};
}

std::string trim(std::string_view text) {
    std::size_t b = 0, e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    return std::string(text.substr(b, e - b));
}

}  // namespace

LlmResponse parse_response(const std::string& raw, KpiKind kpi) {
    auto [r_begin, r_end] = find_marker(raw, "reasoning", 0);
    if (r_begin == std::string::npos) {
        raise(ErrorKind::Parse, "reply is missing the [[ ## reasoning ## ]] marker");
    }
    auto [a_begin, a_end] = find_marker(raw, "answer", r_end);
    if (a_begin == std::string::npos) {
        if (find_marker(raw, "answer", 0).first != std::string::npos) {
            raise(ErrorKind::Parse, "reply markers out of order: answer before reasoning");
        }
        raise(ErrorKind::Parse, "reply is missing the [[ ## answer ## ]] marker");
    }
    auto [c_begin, c_end] = find_marker(raw, "completed", a_end);
    if (c_begin == std::string::npos) {
        if (find_marker(raw, "completed", 0).first != std::string::npos) {
            raise(ErrorKind::Parse, "reply markers out of order: completed before answer");
        }
        raise(ErrorKind::Parse, "reply is missing the [[ ## completed ## ]] marker");
    }

    LlmResponse response;
    response.raw = raw;
    response.reasoning = trim(std::string_view(raw).substr(r_end, a_begin - r_end));
    std::string_view answer_span = std::string_view(raw).substr(a_end, c_begin - a_end);

    if (kpi == KpiKind::TotalTime) {
        // First integer token in the answer span.
        for (std::size_t i = 0; i < answer_span.size(); ++i) {
            bool neg = answer_span[i] == '-' && i + 1 < answer_span.size() &&
                       std::isdigit(static_cast<unsigned char>(answer_span[i + 1]));
            if (!neg && !std::isdigit(static_cast<unsigned char>(answer_span[i]))) continue;
            std::int64_t value = 0;
            auto [ptr, ec] = std::from_chars(answer_span.data() + i,
                                             answer_span.data() + answer_span.size(), value);
            if (ec != std::errc()) break;
            if (value < 0) {
                raise(ErrorKind::InvalidArgument, "predicted total time is negative: ", value);
            }
            response.answer = value;
            return response;
        }
        raise(ErrorKind::Parse, "no integer answer between the answer and completed markers");
    }

    // Occurrence: first yes / no / true / false / 0 / 1 token.
    std::string word;
    for (std::size_t i = 0; i <= answer_span.size(); ++i) {
        char c = i < answer_span.size() ? answer_span[i] : ' ';
        if (std::isalnum(static_cast<unsigned char>(c))) {
            word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            continue;
        }
        if (word == "yes" || word == "true" || word == "1") {
            response.answer = true;
            return response;
        }
        if (word == "no" || word == "false" || word == "0") {
            response.answer = false;
            return response;
        }
        word.clear();
    }
    raise(ErrorKind::Parse, "no yes/no answer between the answer and completed markers");
}

}  // namespace ppm
