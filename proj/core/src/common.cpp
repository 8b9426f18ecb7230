#include "defectcast/common.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

namespace defectcast {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
	x += 0x9E3779B97F4A7C15ULL;
	x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
	x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
	return x ^ (x >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
	return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) noexcept {
	return derive_seed(master, stable_hash(stream));
}

std::uint64_t stable_hash(std::string_view bytes, std::uint64_t basis) noexcept {
	std::uint64_t h = basis;
	for (unsigned char c : bytes) {
		h ^= c;
		h *= 1099511628211ULL;
	}
	return h;
}

std::string hex64(std::uint64_t value) {
	static constexpr char digits[] = "0123456789abcdef";
	std::string out(16, '0');
	for (int i = 15; i >= 0; --i) {
		out[static_cast<std::size_t>(i)] = digits[value & 0xF];
		value >>= 4;
	}
	return out;
}

double Rng::uniform() {
	return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
	// Box-Muller; u1 is shifted into (0, 1] so the log is finite.
	const double u1 = 1.0 - uniform();
	const double u2 = uniform();
	return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::exponential(double rate) {
	return -std::log(1.0 - uniform()) / rate;
}

double Rng::student_t(double dof) {
	double chi2 = 0.0;
	const int k = static_cast<int>(dof);
	for (int i = 0; i < k; ++i) {
		const double z = normal();
		chi2 += z * z;
	}
	return normal() / std::sqrt(chi2 / dof);
}

std::uint64_t Rng::below(std::uint64_t n) {
	if (n == 0) {
		return 0;
	}
	const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
	std::uint64_t x = engine_();
	while (x >= limit) {
		x = engine_();
	}
	return x % n;
}

int Rng::poisson(double mean) {
	if (mean <= 0.0) {
		return 0;
	}
	if (mean < 30.0) {
		const double limit = std::exp(-mean);
		int k = 0;
		double prod = uniform();
		while (prod > limit) {
			++k;
			prod *= uniform();
		}
		return k;
	}
	const double draw = std::round(mean + std::sqrt(mean) * normal());
	return draw < 0.0 ? 0 : static_cast<int>(draw);
}

std::string format_double(double value) {
	if (std::isnan(value)) {
		return "nan";
	}
	if (std::isinf(value)) {
		return value > 0 ? "inf" : "-inf";
	}
	if (value == 0.0) {
		return "0";
	}
	char buffer[64];
	auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
	return std::string(buffer, ptr);
}

double parse_double(std::string_view text) {
	const std::string t = trim(text);
	double value = 0.0;
	auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
	if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
		throw std::invalid_argument("not a number: '" + t + "'");
	}
	return value;
}

std::int64_t parse_int(std::string_view text) {
	const std::string t = trim(text);
	std::int64_t value = 0;
	auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
	if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
		throw std::invalid_argument("not an integer: '" + t + "'");
	}
	return value;
}

std::vector<std::string> split(std::string_view text, char delimiter) {
	std::vector<std::string> parts;
	std::size_t start = 0;
	while (true) {
		const auto pos = text.find(delimiter, start);
		if (pos == std::string_view::npos) {
			parts.emplace_back(text.substr(start));
			break;
		}
		parts.emplace_back(text.substr(start, pos - start));
		start = pos + 1;
	}
	return parts;
}

std::string join(const std::vector<std::string> &parts, std::string_view delimiter) {
	std::string out;
	for (std::size_t i = 0; i < parts.size(); ++i) {
		if (i > 0) {
			out += delimiter;
		}
		out += parts[i];
	}
	return out;
}

std::string trim(std::string_view text) {
	const auto first = text.find_first_not_of(" \t\r\n");
	if (first == std::string_view::npos) {
		return {};
	}
	const auto last = text.find_last_not_of(" \t\r\n");
	return std::string(text.substr(first, last - first + 1));
}

} // namespace defectcast
