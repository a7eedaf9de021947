#include "dualcusum/csv.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dualcusum/config.hpp"
#include "dualcusum/errors.hpp"

namespace dualcusum {

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> row) {
    if (row.size() != header_.size()) {
        throw InputError("CSV row width does not match the header");
    }
    rows_.push_back(std::move(row));
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::string CsvTable::str() const {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            os << (i ? "," : "") << csv_escape(fields[i]);
        }
        os << "\n";
    };
    line(header_);
    for (const auto& r : rows_) {
        line(r);
    }
    return os.str();
}

void CsvTable::write(const std::filesystem::path& path) const { write_text(path, str()); }

CsvTable CsvTable::parse(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n') {
            fields.push_back(std::move(field));
            field.clear();
            records.push_back(std::move(fields));
            fields.clear();
            any = false;
        } else if (c != '\r') {
            field += c;
            any = true;
        }
    }
    if (any) {
        fields.push_back(std::move(field));
        records.push_back(std::move(fields));
    }
    if (records.empty()) {
        throw InputError("empty CSV text");
    }
    CsvTable t(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        t.add_row(std::move(records[r]));
    }
    return t;
}

std::string num(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return format_number(v);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

}  // namespace dualcusum
