#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sociolex::csv {

// RFC 4180 quoting, applied only when the field needs it.
std::string escape(const std::string& field);
void write_row(std::ostream& os, const std::vector<std::string>& fields);

// Parses one line; understands quoted fields and doubled quotes. Embedded
// newlines are not supported (no writer here produces them).
std::vector<std::string> parse_line(const std::string& line);

// Reads all rows, header included.
std::vector<std::vector<std::string>> read_rows(const std::string& path);

// Shortest round-trip decimal form, identical on every run.
std::string fmt(double v);
std::string fmt(std::int64_t v);
std::string fmt(std::uint64_t v);

}  // namespace sociolex::csv
