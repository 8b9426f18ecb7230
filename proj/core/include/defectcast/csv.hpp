#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace defectcast::csv {

/// RFC 4180 table. `rows[i]` was read from physical line `line_numbers[i]` (header is line 1).
struct Table {
	std::vector<std::string> header;
	std::vector<std::vector<std::string>> rows;
	std::vector<std::size_t> line_numbers;

	/// Index of `name` in the header, or npos.
	std::size_t column(std::string_view name) const;
};

Table parse(std::string_view text);

/// Throws LoadError naming the file when it cannot be opened.
Table read_file(const std::filesystem::path &path);

std::string escape(std::string_view cell);
void write_row(std::ostream &out, const std::vector<std::string> &cells);

} // namespace defectcast::csv
