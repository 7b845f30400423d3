#ifndef REPBIAS_CSV_H_
#define REPBIAS_CSV_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace repbias {

// Shortest decimal string that parses back to exactly `value`.
std::string FormatDouble(double value);

// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF.
// Returns every record including the header.
std::vector<std::vector<std::string>> ReadCsvFile(const std::filesystem::path& path);
std::vector<std::vector<std::string>> ParseCsv(std::string_view text);

// Writes one record, quoting fields that need it.
void WriteCsvRow(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace repbias

#endif  // REPBIAS_CSV_H_
