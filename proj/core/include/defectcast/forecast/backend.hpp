#pragma once

#include "defectcast/forecast/fitted.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace defectcast::forecast {

/// One line of the line-delimited JSON protocol spoken with forecasting adapters.
struct BackendRequest {
	std::string id;
	std::string op = "forecast"; // "hello" or "forecast"
	std::vector<double> series;
	int h = 1;
	std::vector<double> quantiles;
	std::string model;
};

struct BackendResponse {
	std::string id;
	std::vector<double> mean;
	/// Keyed by the level as sent, e.g. "0.05".
	std::map<std::string, std::vector<double>> quantiles;
	std::optional<std::string> error;
	/// hello only
	std::string name;
	std::string version;
	std::vector<std::string> models;
};

struct BackendInfo {
	std::string name;
	std::string version;
	std::vector<std::string> models;
};

std::string encode_request(const BackendRequest &request);
std::string encode_response(const BackendResponse &response);
/// Throws BackendError on malformed JSON or wrongly typed fields.
BackendResponse decode_response(std::string_view line);
BackendRequest decode_request(std::string_view line);
/// Canonical key for a quantile level ("0.05", "0.95").
std::string quantile_key(double level);

/// Exclusive-use handle: at most one request in flight.
class ForecastBackend {
public:
	virtual ~ForecastBackend() = default;
	virtual const BackendInfo &info() const = 0;
	virtual BackendResponse request(const BackendRequest &request) = 0;
};

/// Repeats the last observed value; always available.
class NaiveBackend final : public ForecastBackend {
public:
	const BackendInfo &info() const override {
		return info_;
	}
	BackendResponse request(const BackendRequest &request) override;

private:
	BackendInfo info_{"naive", "1", {"naive"}};
};

struct SubprocessOptions {
	/// argv; the first element is resolved through PATH.
	std::vector<std::string> command;
	std::chrono::milliseconds timeout{120000};
};

/// Adapter process spoken to over its stdin/stdout. The constructor launches the process
/// and completes the hello handshake.
class SubprocessBackend final : public ForecastBackend {
public:
	explicit SubprocessBackend(SubprocessOptions options);
	~SubprocessBackend() override;
	SubprocessBackend(const SubprocessBackend &) = delete;
	SubprocessBackend &operator=(const SubprocessBackend &) = delete;

	const BackendInfo &info() const override {
		return info_;
	}
	BackendResponse request(const BackendRequest &request) override;

private:
	void send_line(const std::string &line);
	std::string read_line();
	void terminate();

	SubprocessOptions options_;
	BackendInfo info_;
	int pid_ = -1;
	int to_child_ = -1;
	int from_child_ = -1;
	std::string buffer_;
	bool broken_ = false;
	std::mutex mutex_;
};

/// Sends one forecast request and validates the reply: echoed id, h finite means, and the
/// 5%/95% quantiles (when present) as the 90% interval.
ForecastResult external_forecast(ForecastBackend &backend, std::span<const double> series, int h,
                                 const std::string &model = {});

} // namespace defectcast::forecast
