#include "defectcast/csv.hpp"

#include "defectcast/common.hpp"

#include <fstream>
#include <sstream>

namespace defectcast::csv {

std::size_t Table::column(std::string_view name) const {
	for (std::size_t i = 0; i < header.size(); ++i) {
		if (header[i] == name) {
			return i;
		}
	}
	return std::string::npos;
}

Table parse(std::string_view text) {
	Table table;
	std::vector<std::string> record;
	std::string cell;
	bool in_quotes = false;
	bool cell_started = false;
	std::size_t line = 1;
	std::size_t record_line = 1;

	auto finish_record = [&]() {
		record.push_back(std::move(cell));
		cell.clear();
		const bool blank = record.size() == 1 && record[0].empty();
		if (!blank) {
			if (table.header.empty() && table.rows.empty()) {
				table.header = std::move(record);
			} else {
				table.rows.push_back(std::move(record));
				table.line_numbers.push_back(record_line);
			}
		}
		record.clear();
		cell_started = false;
	};

	// Skip a UTF-8 byte order mark.
	if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") {
		text.remove_prefix(3);
	}

	for (std::size_t i = 0; i < text.size(); ++i) {
		const char c = text[i];
		if (in_quotes) {
			if (c == '"') {
				if (i + 1 < text.size() && text[i + 1] == '"') {
					cell += '"';
					++i;
				} else {
					in_quotes = false;
				}
			} else {
				if (c == '\n') {
					++line;
				}
				cell += c;
			}
			continue;
		}
		if (c == '"' && !cell_started) {
			in_quotes = true;
			cell_started = true;
		} else if (c == ',') {
			record.push_back(std::move(cell));
			cell.clear();
			cell_started = false;
		} else if (c == '\n') {
			finish_record();
			++line;
			record_line = line;
		} else if (c == '\r') {
			// CRLF line endings
		} else {
			cell += c;
			cell_started = true;
		}
	}
	if (in_quotes) {
		throw ParseError("unterminated quoted cell", record_line);
	}
	if (!cell.empty() || !record.empty()) {
		finish_record();
	}
	return table;
}

Table read_file(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw LoadError("cannot open " + path.string());
	}
	std::ostringstream buffer;
	buffer << in.rdbuf();
	return parse(buffer.str());
}

std::string escape(std::string_view cell) {
	if (cell.find_first_of(",\"\n\r") == std::string_view::npos) {
		return std::string(cell);
	}
	std::string out = "\"";
	for (char c : cell) {
		if (c == '"') {
			out += "\"\"";
		} else {
			out += c;
		}
	}
	out += '"';
	return out;
}

void write_row(std::ostream &out, const std::vector<std::string> &cells) {
	for (std::size_t i = 0; i < cells.size(); ++i) {
		if (i > 0) {
			out << ',';
		}
		out << escape(cells[i]);
	}
	out << '\n';
}

} // namespace defectcast::csv
