#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ppmkit/event_log.hpp"

namespace ppm {

/// The context-sensitive vocabulary: every activity name in the log, every
/// categorical global-attribute value, and every global-attribute name.
/// Numeric values are excluded; they carry no linguistic semantics.
struct ContextSet {
    std::vector<std::string> tokens;  // sorted, unique

    bool contains(std::string_view token) const;
    std::size_t size() const { return tokens.size(); }
};

ContextSet build_context_set(const EventLog& log, const LogSchema& schema);

/// First 4 symbols of the base-36 rendering of sha256(salt || token).
/// Always matches ^[A-Z0-9]{4}$.
std::string hash_token(std::string_view token, std::string_view salt);

/// Injective token -> 4-character identifier map over a context set.
struct HashMapping {
    std::vector<std::pair<std::string, std::string>> entries;  // sorted by token
    std::string salt;

    const std::string* id_for(std::string_view token) const;
    /// Identifier -> token map, used to de-anonymize.
    HashMapping inverse() const;
};

/// Assigns identifiers to all tokens. Digest collisions (and identifiers
/// made of digits only, which could also appear verbatim as numbers in a
/// prompt) are re-digested with a counter suffix until unique.
HashMapping build_mapping(const ContextSet& context, const std::string& salt);

/// Replaces every token occurrence with its identifier. Longer tokens win
/// at each position, so tokens embedded in longer tokens are untouched;
/// everything outside matches is byte-identical.
std::string anonymize(std::string_view text, const HashMapping& mapping);

void write_mapping_csv(const HashMapping& mapping, const std::string& path);
HashMapping read_mapping_csv(const std::string& path);

}  // namespace ppm
