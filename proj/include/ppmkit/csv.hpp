#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ppm {

/// Minimal RFC-4180 CSV: quoted fields may contain commas, quotes ("")
/// and newlines. Records are separated by LF or CRLF.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by exact header name, -1 when absent.
    int column(std::string_view name) const;
};

CsvTable read_csv_text(std::string_view text, const std::string& origin = "<memory>");
CsvTable read_csv_file(const std::string& path);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_field(std::string_view value);

std::string to_csv_line(const std::vector<std::string>& fields);

void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows);

}  // namespace ppm
