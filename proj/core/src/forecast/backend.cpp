#include "defectcast/forecast/backend.hpp"

#include <json.hpp>

#include <atomic>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>

#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char **environ;

namespace defectcast::forecast {

using nlohmann::json;

namespace {

constexpr double kLowerLevel = 0.05;
constexpr double kUpperLevel = 0.95;

std::vector<double> number_array(const json &j, const char *field) {
	if (!j.is_array()) {
		throw BackendError(std::string("field '") + field + "' must be an array of numbers");
	}
	std::vector<double> out;
	out.reserve(j.size());
	for (const auto &v : j) {
		if (!v.is_number()) {
			throw BackendError(std::string("field '") + field + "' holds a non-numeric value");
		}
		out.push_back(v.get<double>());
	}
	return out;
}

std::string next_request_id() {
	static std::atomic<std::uint64_t> counter{0};
	return "req-" + std::to_string(counter.fetch_add(1) + 1);
}

} // namespace

std::string quantile_key(double level) {
	return format_double(level);
}

std::string encode_request(const BackendRequest &r) {
	json j;
	j["id"] = r.id;
	j["op"] = r.op;
	if (r.op == "forecast") {
		j["series"] = r.series;
		j["h"] = r.h;
		j["quantiles"] = r.quantiles;
		j["model"] = r.model;
	}
	return j.dump();
}

std::string encode_response(const BackendResponse &r) {
	json j;
	j["id"] = r.id;
	if (r.error) {
		j["error"] = *r.error;
		return j.dump();
	}
	if (!r.name.empty()) {
		j["name"] = r.name;
		j["version"] = r.version;
		j["models"] = r.models;
		return j.dump();
	}
	j["mean"] = r.mean;
	json q = json::object();
	for (const auto &[k, v] : r.quantiles) {
		q[k] = v;
	}
	j["quantiles"] = q;
	return j.dump();
}

BackendResponse decode_response(std::string_view line) {
	json j;
	try {
		j = json::parse(line);
	} catch (const json::exception &e) {
		throw BackendError(std::string("malformed response line: ") + e.what());
	}
	if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
		throw BackendError("response lacks a string id");
	}
	BackendResponse r;
	r.id = j["id"].get<std::string>();
	if (j.contains("error")) {
		r.error = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
		return r;
	}
	if (j.contains("name")) {
		if (!j["name"].is_string()) {
			throw BackendError("hello response name must be a string");
		}
		r.name = j["name"].get<std::string>();
		if (j.contains("version")) {
			r.version = j["version"].is_string() ? j["version"].get<std::string>() : j["version"].dump();
		}
		if (j.contains("models")) {
			if (!j["models"].is_array()) {
				throw BackendError("hello response models must be an array");
			}
			for (const auto &m : j["models"]) {
				r.models.push_back(m.is_string() ? m.get<std::string>() : m.dump());
			}
		}
		return r;
	}
	if (!j.contains("mean")) {
		throw BackendError("response has neither mean nor error");
	}
	r.mean = number_array(j["mean"], "mean");
	if (j.contains("quantiles")) {
		if (!j["quantiles"].is_object()) {
			throw BackendError("field 'quantiles' must be an object");
		}
		for (const auto &[k, v] : j["quantiles"].items()) {
			r.quantiles[k] = number_array(v, "quantiles");
		}
	}
	return r;
}

BackendRequest decode_request(std::string_view line) {
	json j;
	try {
		j = json::parse(line);
	} catch (const json::exception &e) {
		throw BackendError(std::string("malformed request line: ") + e.what());
	}
	if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("op") || !j["op"].is_string()) {
		throw BackendError("request lacks id or op");
	}
	BackendRequest r;
	r.id = j["id"].get<std::string>();
	r.op = j["op"].get<std::string>();
	if (r.op == "forecast") {
		r.series = number_array(j.value("series", json::array()), "series");
		if (!j.contains("h") || !j["h"].is_number_integer()) {
			throw BackendError("request h must be an integer");
		}
		r.h = j["h"].get<int>();
		r.quantiles = number_array(j.value("quantiles", json::array()), "quantiles");
		r.model = j.value("model", std::string());
	}
	return r;
}

BackendResponse NaiveBackend::request(const BackendRequest &request) {
	BackendResponse r;
	r.id = request.id;
	if (request.op == "hello") {
		r.name = info_.name;
		r.version = info_.version;
		r.models = info_.models;
		return r;
	}
	if (request.op != "forecast") {
		r.error = "unknown op";
		return r;
	}
	if (request.h < 1) {
		r.error = "invalid horizon";
		return r;
	}
	if (request.series.empty()) {
		r.error = "empty series";
		return r;
	}
	r.mean.assign(static_cast<std::size_t>(request.h), request.series.back());
	return r;
}

SubprocessBackend::SubprocessBackend(SubprocessOptions options) : options_(std::move(options)) {
	if (options_.command.empty()) {
		throw BackendError("adapter command is empty");
	}
	// A dead adapter must surface as a BackendError, not terminate the engine.
	std::signal(SIGPIPE, SIG_IGN);

	int in_pipe[2];
	int out_pipe[2];
	if (pipe(in_pipe) != 0) {
		throw BackendError(std::string("pipe: ") + std::strerror(errno));
	}
	if (pipe(out_pipe) != 0) {
		close(in_pipe[0]);
		close(in_pipe[1]);
		throw BackendError(std::string("pipe: ") + std::strerror(errno));
	}
	posix_spawn_file_actions_t actions;
	posix_spawn_file_actions_init(&actions);
	posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
	posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
	posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
	posix_spawn_file_actions_addclose(&actions, out_pipe[0]);

	std::vector<char *> argv;
	for (auto &a : options_.command) {
		argv.push_back(a.data());
	}
	argv.push_back(nullptr);
	pid_t pid = 0;
	const int rc = posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
	posix_spawn_file_actions_destroy(&actions);
	close(in_pipe[0]);
	close(out_pipe[1]);
	if (rc != 0) {
		close(in_pipe[1]);
		close(out_pipe[0]);
		throw BackendError("could not launch adapter '" + options_.command[0] + "': " + std::strerror(rc));
	}
	pid_ = pid;
	to_child_ = in_pipe[1];
	from_child_ = out_pipe[0];

	try {
		BackendRequest hello;
		hello.id = "hello-" + next_request_id();
		hello.op = "hello";
		const auto reply = request(hello);
		if (reply.error) {
			throw BackendError("adapter handshake failed: " + *reply.error);
		}
		if (reply.name.empty()) {
			throw BackendError("adapter handshake reply carries no name");
		}
		info_ = {reply.name, reply.version, reply.models};
	} catch (...) {
		terminate();
		throw;
	}
}

SubprocessBackend::~SubprocessBackend() {
	terminate();
}

void SubprocessBackend::terminate() {
	if (to_child_ >= 0) {
		close(to_child_);
		to_child_ = -1;
	}
	if (pid_ > 0) {
		int status = 0;
		// closing stdin asks the adapter to exit; give it a moment before killing it
		for (int i = 0; i < 50; ++i) {
			const pid_t r = waitpid(pid_, &status, WNOHANG);
			if (r == pid_ || r < 0) {
				pid_ = -1;
				break;
			}
			usleep(20000);
		}
		if (pid_ > 0) {
			kill(pid_, SIGKILL);
			waitpid(pid_, &status, 0);
			pid_ = -1;
		}
	}
	if (from_child_ >= 0) {
		close(from_child_);
		from_child_ = -1;
	}
}

void SubprocessBackend::send_line(const std::string &line) {
	std::string data = line + "\n";
	std::size_t written = 0;
	while (written < data.size()) {
		const ssize_t n = write(to_child_, data.data() + written, data.size() - written);
		if (n < 0) {
			if (errno == EINTR) {
				continue;
			}
			broken_ = true;
			throw BackendError(std::string("writing to adapter failed: ") + std::strerror(errno));
		}
		written += static_cast<std::size_t>(n);
	}
}

std::string SubprocessBackend::read_line() {
	const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
	while (true) {
		const auto nl = buffer_.find('\n');
		if (nl != std::string::npos) {
			std::string line = buffer_.substr(0, nl);
			buffer_.erase(0, nl + 1);
			return line;
		}
		const auto remaining =
		    std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
		if (remaining.count() <= 0) {
			broken_ = true;
			throw BackendError("adapter timed out after " + std::to_string(options_.timeout.count()) + " ms");
		}
		pollfd pfd{from_child_, POLLIN, 0};
		const int rc = poll(&pfd, 1, static_cast<int>(remaining.count()));
		if (rc < 0) {
			if (errno == EINTR) {
				continue;
			}
			broken_ = true;
			throw BackendError(std::string("poll on adapter failed: ") + std::strerror(errno));
		}
		if (rc == 0) {
			continue;
		}
		char chunk[4096];
		const ssize_t n = read(from_child_, chunk, sizeof chunk);
		if (n < 0) {
			if (errno == EINTR) {
				continue;
			}
			broken_ = true;
			throw BackendError(std::string("reading from adapter failed: ") + std::strerror(errno));
		}
		if (n == 0) {
			broken_ = true;
			throw BackendError("adapter closed its output");
		}
		buffer_.append(chunk, static_cast<std::size_t>(n));
	}
}

BackendResponse SubprocessBackend::request(const BackendRequest &request) {
	std::lock_guard lock(mutex_);
	if (broken_) {
		throw BackendError("adapter '" + options_.command[0] + "' is no longer usable");
	}
	send_line(encode_request(request));
	return decode_response(read_line());
}

ForecastResult external_forecast(ForecastBackend &backend, std::span<const double> series, int h,
                                 const std::string &model) {
	if (h < 1) {
		throw PreconditionError("forecast horizon must be >= 1");
	}
	for (double v : series) {
		if (!std::isfinite(v)) {
			throw PreconditionError("series sent to a backend must be finite");
		}
	}
	BackendRequest req;
	req.id = next_request_id();
	req.op = "forecast";
	req.series.assign(series.begin(), series.end());
	req.h = h;
	req.quantiles = {kLowerLevel, kUpperLevel};
	req.model = model.empty() ? backend.info().name : model;

	const auto reply = backend.request(req);
	const std::string who = "backend '" + backend.info().name + "'";
	if (reply.id != req.id) {
		throw BackendError(who + " answered id '" + reply.id + "' to request '" + req.id + "'");
	}
	if (reply.error) {
		throw BackendError(who + " reported: " + *reply.error);
	}
	const auto hs = static_cast<std::size_t>(h);
	if (reply.mean.size() != hs) {
		throw BackendError(who + " returned " + std::to_string(reply.mean.size()) + " means for h=" +
		                   std::to_string(h));
	}
	const auto finite = [](const std::vector<double> &v) {
		for (double x : v) {
			if (!std::isfinite(x)) {
				return false;
			}
		}
		return true;
	};
	if (!finite(reply.mean)) {
		throw BackendError(who + " returned non-finite means");
	}
	ForecastResult result;
	result.horizon = h;
	result.origin = series.size();
	result.points = reply.mean;
	const auto lo = reply.quantiles.find(quantile_key(kLowerLevel));
	const auto hi = reply.quantiles.find(quantile_key(kUpperLevel));
	if (lo != reply.quantiles.end() && hi != reply.quantiles.end()) {
		if (lo->second.size() != hs || hi->second.size() != hs) {
			throw BackendError(who + " returned quantile vectors of the wrong length");
		}
		if (!finite(lo->second) || !finite(hi->second)) {
			throw BackendError(who + " returned non-finite quantiles");
		}
		std::vector<double> lower(hs), upper(hs);
		for (std::size_t k = 0; k < hs; ++k) {
			lower[k] = std::min(lo->second[k], result.points[k]);
			upper[k] = std::max(hi->second[k], result.points[k]);
		}
		result.lower = std::move(lower);
		result.upper = std::move(upper);
	}
	return result;
}

} // namespace defectcast::forecast
