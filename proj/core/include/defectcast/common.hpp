#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace defectcast {

/// UTC seconds since the Unix epoch.
using EpochSeconds = std::int64_t;

inline constexpr EpochSeconds kSecondsPerDay = 86400;

class Error : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

/// A required input file is missing or unreadable.
class LoadError : public Error {
public:
	using Error::Error;
};

/// Input tables violate a structural invariant. `offenders` lists the ids involved.
class SchemaError : public Error {
public:
	SchemaError(const std::string &what, std::vector<std::string> offenders = {})
	    : Error(what), offenders_(std::move(offenders)) {}
	const std::vector<std::string> &offenders() const noexcept {
		return offenders_;
	}

private:
	std::vector<std::string> offenders_;
};

/// A row could not be parsed. `row()` is 1-based and counts the header as row 1.
class ParseError : public Error {
public:
	ParseError(const std::string &what, std::size_t row) : Error(what), row_(row) {}
	std::size_t row() const noexcept {
		return row_;
	}

private:
	std::size_t row_;
};

class PreconditionError : public Error {
public:
	using Error::Error;
};

class FitError : public Error {
public:
	using Error::Error;
};

/// Constant (zero-variance) training data: the likelihood is undefined.
class DegenerateSeriesError : public FitError {
public:
	using FitError::FitError;
};

class BackendError : public Error {
public:
	using Error::Error;
};

class ConfigError : public Error {
public:
	using Error::Error;
};

/// Counter-based seed derivation: the same (master, stream) always yields the same seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) noexcept;

/// 64-bit FNV-1a. Stable across platforms and runs.
std::uint64_t stable_hash(std::string_view bytes, std::uint64_t basis = 14695981039346656037ULL) noexcept;

std::string hex64(std::uint64_t value);

/// Seeded generator with platform-independent transforms.
class Rng {
public:
	explicit Rng(std::uint64_t seed) : engine_(seed) {}

	/// Uniform on [0, 1) with 53 random bits.
	double uniform();
	double uniform(double lo, double hi) {
		return lo + (hi - lo) * uniform();
	}
	double normal();
	double normal(double mean, double sd) {
		return mean + sd * normal();
	}
	double exponential(double rate);
	double student_t(double dof);
	/// Uniform integer in [0, n).
	std::uint64_t below(std::uint64_t n);
	int poisson(double mean);
	bool bernoulli(double p) {
		return uniform() < p;
	}

	template <typename T>
	void shuffle(std::vector<T> &items) {
		for (std::size_t i = items.size(); i > 1; --i) {
			std::swap(items[i - 1], items[below(i)]);
		}
	}

	std::uint64_t next() {
		return engine_();
	}

private:
	std::mt19937_64 engine_;
};

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Parses a full-string decimal number; throws std::invalid_argument otherwise.
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

std::vector<std::string> split(std::string_view text, char delimiter);
std::string join(const std::vector<std::string> &parts, std::string_view delimiter);
std::string trim(std::string_view text);

} // namespace defectcast
