#include "ppmkit/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "ppmkit/error.hpp"

namespace ppm {

namespace {

using Json = nlohmann::ordered_json;

struct LineParser {
    std::string_view line;
    std::size_t pos = 0;
    const std::string& origin;
    std::size_t line_no;

    [[noreturn]] void fail(const std::string& what) {
        raise(ErrorKind::Config, origin, ":", line_no, ": ", what);
    }

    void skip_ws() {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    }

    bool at_end_or_comment() {
        skip_ws();
        return pos >= line.size() || line[pos] == '#';
    }

    std::string bare_key() {
        skip_ws();
        std::size_t start = pos;
        while (pos < line.size() &&
               (std::isalnum(static_cast<unsigned char>(line[pos])) || line[pos] == '_' ||
                line[pos] == '-')) {
            ++pos;
        }
        if (pos == start) fail("expected a key");
        return std::string(line.substr(start, pos - start));
    }

    std::string quoted_string() {
        ++pos;  // opening quote
        std::string out;
        while (true) {
            if (pos >= line.size()) fail("unterminated string");
            char c = line[pos++];
            if (c == '"') break;
            if (c == '\\') {
                if (pos >= line.size()) fail("dangling escape");
                char esc = line[pos++];
                switch (esc) {
                    case '"': out.push_back('"'); break;
                    case '\\': out.push_back('\\'); break;
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    default: fail(strcat("unsupported escape '\\", esc, "'"));
                }
            } else {
                out.push_back(c);
            }
        }
        return out;
    }

    Json scalar() {
        skip_ws();
        if (pos >= line.size()) fail("expected a value");
        char c = line[pos];
        if (c == '"') return quoted_string();
        if (c == '[') {
            ++pos;
            Json array = Json::array();
            skip_ws();
            if (pos < line.size() && line[pos] == ']') {
                ++pos;
                return array;
            }
            while (true) {
                array.push_back(scalar());
                skip_ws();
                if (pos < line.size() && line[pos] == ',') {
                    ++pos;
                    skip_ws();
                    if (pos < line.size() && line[pos] == ']') {  // trailing comma
                        ++pos;
                        return array;
                    }
                    continue;
                }
                if (pos < line.size() && line[pos] == ']') {
                    ++pos;
                    return array;
                }
                fail("expected ',' or ']' in array");
            }
        }
        if (line.compare(pos, 4, "true") == 0) {
            pos += 4;
            return true;
        }
        if (line.compare(pos, 5, "false") == 0) {
            pos += 5;
            return false;
        }
        // Number: integer when it parses fully as one, float otherwise.
        std::size_t start = pos;
        while (pos < line.size() && line[pos] != ',' && line[pos] != ']' && line[pos] != '#' &&
               line[pos] != ' ' && line[pos] != '\t') {
            ++pos;
        }
        std::string_view token = line.substr(start, pos - start);
        if (token.empty()) fail("expected a value");
        long long integer = 0;
        auto [iptr, iec] = std::from_chars(token.data(), token.data() + token.size(), integer);
        if (iec == std::errc() && iptr == token.data() + token.size()) return integer;
        double real = 0;
        auto [dptr, dec] = std::from_chars(token.data(), token.data() + token.size(), real);
        if (dec == std::errc() && dptr == token.data() + token.size()) return real;
        fail(strcat("invalid value '", std::string(token), "'"));
    }
};

std::vector<std::string> split_dotted(const std::string& name, LineParser& parser) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : name) {
        if (c == '.') {
            if (current.empty()) parser.fail("empty table-name segment");
            parts.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (current.empty()) parser.fail("empty table-name segment");
    parts.push_back(current);
    return parts;
}

Json* descend(Json& root, const std::vector<std::string>& parts, bool as_array,
              LineParser& parser) {
    Json* node = &root;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const std::string& key = parts[i];
        bool last = i + 1 == parts.size();
        if (last && as_array) {
            if (!node->contains(key)) (*node)[key] = Json::array();
            Json& array = (*node)[key];
            if (!array.is_array()) parser.fail(strcat("'", key, "' is not an array of tables"));
            array.push_back(Json::object());
            return &array.back();
        }
        if (!node->contains(key)) (*node)[key] = Json::object();
        Json& child = (*node)[key];
        if (child.is_array()) {
            if (child.empty()) parser.fail(strcat("'", key, "' has no elements yet"));
            node = &child.back();
        } else if (child.is_object()) {
            node = &child;
        } else {
            parser.fail(strcat("'", key, "' is already a value"));
        }
    }
    return node;
}

}  // namespace

nlohmann::ordered_json parse_toml_lite(std::string_view text, const std::string& origin) {
    Json root = Json::object();
    Json* current = &root;

    std::size_t line_no = 0;
    std::size_t offset = 0;
    while (offset <= text.size()) {
        std::size_t eol = text.find('\n', offset);
        std::string_view line = text.substr(offset, eol == std::string_view::npos
                                                        ? text.size() - offset
                                                        : eol - offset);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;

        LineParser parser{line, 0, origin, line_no};
        if (!parser.at_end_or_comment()) {
            if (line[parser.pos] == '[') {
                bool array_table = parser.pos + 1 < line.size() && line[parser.pos + 1] == '[';
                parser.pos += array_table ? 2 : 1;
                std::string name;
                parser.skip_ws();
                while (parser.pos < line.size() && line[parser.pos] != ']' &&
                       line[parser.pos] != ' ' && line[parser.pos] != '\t') {
                    name.push_back(line[parser.pos++]);
                }
                parser.skip_ws();
                if (parser.pos >= line.size() || line[parser.pos] != ']') {
                    parser.fail("unterminated table header");
                }
                if (array_table &&
                    (parser.pos + 1 >= line.size() || line[parser.pos + 1] != ']')) {
                    parser.fail("unterminated array-of-tables header");
                }
                parser.pos += array_table ? 2 : 1;
                if (!parser.at_end_or_comment()) parser.fail("trailing characters after table header");
                current = descend(root, split_dotted(name, parser), array_table, parser);
            } else {
                std::string key = parser.bare_key();
                parser.skip_ws();
                if (parser.pos >= line.size() || line[parser.pos] != '=') {
                    parser.fail(strcat("expected '=' after key '", key, "'"));
                }
                ++parser.pos;
                Json value = parser.scalar();
                if (!parser.at_end_or_comment()) parser.fail("trailing characters after value");
                if (current->contains(key)) parser.fail(strcat("duplicate key '", key, "'"));
                (*current)[key] = std::move(value);
            }
        }

        if (eol == std::string_view::npos) break;
        offset = eol + 1;
    }
    return root;
}

nlohmann::ordered_json parse_toml_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Io, "cannot open '", path, "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_toml_lite(buf.str(), path);
}

}  // namespace ppm
