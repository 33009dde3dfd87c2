#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ppmkit/event_log.hpp"
#include "ppmkit/trace_encoding.hpp"

namespace ppm {

enum class PromptSection {
    Header,
    AttributesEncoding,
    OutputFormat,
    RunningFormat,
    DomainBackground,
    Examples,
    RunningTrace,
};

const char* to_string(PromptSection section);

/// The seven prompt sections, in order. Optional analyst-provided sections
/// (attribute descriptions, domain background) may be empty; empty sections
/// are skipped when rendering.
struct PromptBundle {
    std::vector<std::pair<PromptSection, std::string>> sections;
    KpiKind kpi = KpiKind::TotalTime;
    bool hashed = false;
    /// Training instances dropped from the tail to fit the character budget.
    std::size_t dropped_instances = 0;

    std::string render() const;
    const std::string& section_text(PromptSection section) const;
};

/// Assembles the prompt from completed training instances and one running
/// instance. The KPI name is substituted throughout. With hashed = true the
/// analyst free-text lines (attribute descriptions, domain background) are
/// omitted; token hashing itself is applied afterwards by the anonymizer.
/// char_budget > 0 drops training instances from the end until the rendered
/// prompt fits.
PromptBundle build_prompt(const std::vector<EncodedInstance>& train,
                          const EncodedInstance& running, const LogSchema& schema, bool hashed,
                          std::size_t char_budget = 0);

struct LlmResponse {
    std::string reasoning;
    std::variant<std::int64_t, bool> answer;
    std::string raw;

    std::int64_t answer_minutes() const { return std::get<std::int64_t>(answer); }
    bool answer_occurs() const { return std::get<bool>(answer); }
};

/// Parses a reply against the marker grammar: reasoning between the
/// reasoning and answer markers, the answer between the answer and
/// completed markers. The answer is the first integer token (total time)
/// or the first yes/no/true/false/0/1 token (occurrence). Marker spacing is
/// tolerated; missing or out-of-order markers raise parse errors.
LlmResponse parse_response(const std::string& raw, KpiKind kpi);

}  // namespace ppm
