#include "ppmkit/anonymizer.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "ppmkit/csv.hpp"
#include "ppmkit/sha256.hpp"

namespace ppm {

bool ContextSet::contains(std::string_view token) const {
    return std::binary_search(tokens.begin(), tokens.end(), token,
                              [](std::string_view a, std::string_view b) { return a < b; });
}

ContextSet build_context_set(const EventLog& log, const LogSchema& schema) {
    std::set<std::string> tokens;
    for (const std::string& activity : log.activity_alphabet()) {
        if (!activity.empty()) tokens.insert(activity);
    }
    for (const auto* decl : schema.global_attributes()) {
        tokens.insert(decl->name);
        if (decl->type != AttrType::Categorical) continue;
        for (const auto& trace : log.traces) {
            for (const auto& e : trace.events) {
                const AttributeValue* v = e.attr(decl->name);
                if (v && std::holds_alternative<std::string>(*v)) {
                    const std::string& s = std::get<std::string>(*v);
                    if (!s.empty()) tokens.insert(s);
                }
            }
        }
    }
    ContextSet context;
    context.tokens.assign(tokens.begin(), tokens.end());
    return context;
}

std::string hash_token(std::string_view token, std::string_view salt) {
    if (token.empty()) raise(ErrorKind::InvalidArgument, "cannot hash an empty token");
    std::string material;
    material.reserve(salt.size() + token.size());
    material.append(salt);
    material.append(token);
    std::string digits = sha256_base36(material);
    while (digits.size() < 4) digits.insert(digits.begin(), '0');
    return digits.substr(0, 4);
}

const std::string* HashMapping::id_for(std::string_view token) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), token,
                               [](const auto& entry, std::string_view key) {
                                   return entry.first < key;
                               });
    if (it != entries.end() && it->first == token) return &it->second;
    return nullptr;
}

HashMapping HashMapping::inverse() const {
    HashMapping inv;
    inv.salt = salt;
    inv.entries.reserve(entries.size());
    for (const auto& [token, id] : entries) inv.entries.emplace_back(id, token);
    std::sort(inv.entries.begin(), inv.entries.end());
    return inv;
}

namespace {

bool all_digits(const std::string& id) {
    return std::all_of(id.begin(), id.end(),
                       [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

HashMapping build_mapping(const ContextSet& context, const std::string& salt) {
    HashMapping mapping;
    mapping.salt = salt;
    std::set<std::string> used;
    for (const std::string& token : context.tokens) {
        std::string id = hash_token(token, salt);
        for (int attempt = 1; all_digits(id) || used.count(id); ++attempt) {
            id = hash_token(token + "#" + std::to_string(attempt), salt);
        }
        used.insert(id);
        mapping.entries.emplace_back(token, id);
    }
    std::sort(mapping.entries.begin(), mapping.entries.end());
    return mapping;
}

std::string anonymize(std::string_view text, const HashMapping& mapping) {
    // Candidates per first byte, longest token first so a token embedded in
    // a longer one never matches early.
    std::map<char, std::vector<const std::pair<std::string, std::string>*>> by_first;
    for (const auto& entry : mapping.entries) {
        if (!entry.first.empty()) by_first[entry.first[0]].push_back(&entry);
    }
    for (auto& [first, candidates] : by_first) {
        std::sort(candidates.begin(), candidates.end(), [](const auto* a, const auto* b) {
            if (a->first.size() != b->first.size()) return a->first.size() > b->first.size();
            return a->first < b->first;
        });
    }

    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        auto it = by_first.find(text[i]);
        const std::pair<std::string, std::string>* hit = nullptr;
        if (it != by_first.end()) {
            for (const auto* candidate : it->second) {
                const std::string& token = candidate->first;
                if (token.size() <= text.size() - i && text.compare(i, token.size(), token) == 0) {
                    hit = candidate;
                    break;
                }
            }
        }
        if (hit) {
            out += hit->second;
            i += hit->first.size();
        } else {
            out.push_back(text[i]);
            ++i;
        }
    }
    return out;
}

void write_mapping_csv(const HashMapping& mapping, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [token, id] : mapping.entries) rows.push_back({token, id});
    write_csv_file(path, {"token", "identifier"}, rows);
}

HashMapping read_mapping_csv(const std::string& path) {
    CsvTable table = read_csv_file(path);
    if (table.column("token") != 0 || table.column("identifier") != 1) {
        raise(ErrorKind::Schema, path, ": expected header 'token,identifier'");
    }
    HashMapping mapping;
    for (const auto& row : table.rows) mapping.entries.emplace_back(row[0], row[1]);
    std::sort(mapping.entries.begin(), mapping.entries.end());
    return mapping;
}

}  // namespace ppm
