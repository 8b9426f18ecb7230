#pragma once

#include "defectcast/common.hpp"
#include "defectcast/series.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

namespace fixtures {

namespace dc = defectcast;

/// Scratch directory removed on destruction.
class TempDir {
public:
	explicit TempDir(const std::string &tag = "t") {
		static std::atomic<int> counter{0};
		path_ = std::filesystem::temp_directory_path() /
		        ("defectcast-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
		std::filesystem::remove_all(path_);
		std::filesystem::create_directories(path_);
	}
	~TempDir() {
		std::error_code ec;
		std::filesystem::remove_all(path_, ec);
	}
	TempDir(const TempDir &) = delete;
	TempDir &operator=(const TempDir &) = delete;

	const std::filesystem::path &path() const {
		return path_;
	}
	std::filesystem::path operator/(const std::string &name) const {
		return path_ / name;
	}

private:
	std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path &path, const std::string &text) {
	std::filesystem::create_directories(path.parent_path());
	std::ofstream out(path, std::ios::binary);
	out << text;
}

inline std::string read_file(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Weekly panel over `y`; features[t] is the row at t.
inline dc::series::TimeSeriesPanel panel_from(const std::vector<double> &y,
                                              const std::vector<std::vector<double>> &features = {},
                                              std::vector<std::string> names = {}) {
	dc::series::TimeSeriesPanel p;
	p.grid.length = dc::series::WindowLength::Weekly;
	p.grid.start = 1'577'836'800;
	const std::size_t width = features.empty() ? 0 : features.front().size();
	if (names.empty()) {
		for (std::size_t j = 0; j < width; ++j) {
			names.push_back("x" + std::to_string(j + 1));
		}
	}
	p.feature_names = names;
	for (std::size_t t = 0; t < y.size(); ++t) {
		const auto start = p.grid.start + static_cast<dc::EpochSeconds>(t) * 7 * dc::kSecondsPerDay;
		p.grid.boundaries.emplace_back(start, start + 7 * dc::kSecondsPerDay);
		dc::series::Observation o;
		o.target = y[t];
		o.features = features.empty() ? std::vector<double>{} : features[t];
		p.observations.push_back(std::move(o));
	}
	return p;
}

/// ARMA(1,1) with optional constant mean; the first `burn` draws are discarded.
inline std::vector<double> simulate_arma11(double phi, double theta, std::size_t n, std::uint64_t seed,
                                           double mean = 0.0, double sigma = 1.0, std::size_t burn = 200) {
	dc::Rng rng(seed);
	std::vector<double> out;
	double x = 0.0;
	double e_prev = 0.0;
	for (std::size_t t = 0; t < n + burn; ++t) {
		const double e = sigma * rng.normal();
		x = phi * x + e + theta * e_prev;
		e_prev = e;
		if (t >= burn) {
			out.push_back(mean + x);
		}
	}
	return out;
}

inline std::vector<double> simulate_random_walk(std::size_t n, std::uint64_t seed, double start = 50.0) {
	dc::Rng rng(seed);
	std::vector<double> out;
	double x = start;
	for (std::size_t t = 0; t < n; ++t) {
		x += rng.normal();
		out.push_back(x);
	}
	return out;
}

} // namespace fixtures
