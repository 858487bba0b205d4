#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sarcgen {

// RFC 4180 style: comma separated, fields optionally double-quoted, quotes
// doubled inside quoted fields, quoted fields may span lines.
struct CsvRow {
    std::size_t line = 0;  // 1-based line where the row starts
    std::vector<std::string> fields;
};

std::vector<CsvRow> read_csv(std::istream& in);
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);
std::string csv_line(std::span<const std::string> fields);

// Column positions by header name.
class CsvHeader {
public:
    explicit CsvHeader(const CsvRow& header);

    std::optional<std::size_t> find(std::string_view name) const;
    // Throws ValidationError naming the missing column.
    std::size_t require(std::string_view name) const;

private:
    std::vector<std::string> names_;
};

}  // namespace sarcgen
