#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dualcusum {

/// Comma-separated table with a header row. Fields containing commas, quotes
/// or newlines are quoted with doubled inner quotes.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<std::string> row);
    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    std::string str() const;
    void write(const std::filesystem::path& path) const;

    /// Parses text written by str().
    static CsvTable parse(const std::string& text);

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

std::string csv_escape(const std::string& field);

/// 6 significant digits, classic locale; "nan"/"inf" for non-finite values.
std::string num(double v);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace dualcusum
