#include "sarcgen/csv.hpp"

#include <fstream>

#include "sarcgen/errors.hpp"

namespace sarcgen {

std::vector<CsvRow> read_csv(std::istream& in) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    bool row_has_content = false;
    std::size_t line = 1;
    row.line = 1;
    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        if (row_has_content || !row.fields.empty()) {
            end_field();
            rows.push_back(std::move(row));
        }
        row = CsvRow{};
        row.line = line + 1;
        field.clear();
        field_started = false;
        row_has_content = false;
    };
    char c = 0;
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field_started) throw ValidationError("line " + std::to_string(line) + ": stray quote inside field");
                quoted = true;
                field_started = true;
                row_has_content = true;
                break;
            case ',':
                end_field();
                row_has_content = true;
                break;
            case '\r':
                break;
            case '\n':
                end_row();
                ++line;
                break;
            default:
                field.push_back(c);
                field_started = true;
                row_has_content = true;
        }
    }
    if (quoted) throw ValidationError("unterminated quoted field starting before line " + std::to_string(line));
    if (row_has_content) {
        end_field();
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open " + path.string());
    return read_csv(in);
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string{field};
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string csv_line(std::span<const std::string> fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i != 0) out.push_back(',');
        out += csv_escape(fields[i]);
    }
    return out;
}

CsvHeader::CsvHeader(const CsvRow& header) : names_(header.fields) {
    for (auto& n : names_) {
        // Tolerate a UTF-8 byte order mark and surrounding spaces.
        if (n.rfind("\xEF\xBB\xBF", 0) == 0) n.erase(0, 3);
        while (!n.empty() && n.back() == ' ') n.pop_back();
        while (!n.empty() && n.front() == ' ') n.erase(0, 1);
    }
}

std::optional<std::size_t> CsvHeader::find(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t CsvHeader::require(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw ValidationError("missing column '" + std::string{name} + "'");
}

}  // namespace sarcgen
