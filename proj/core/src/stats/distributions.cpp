#include "defectcast/stats/distributions.hpp"

#include "defectcast/common.hpp"
#include "defectcast/stats/quadrature.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace defectcast::stats {

namespace {

constexpr double kInnerTolerance = 1e-9;
constexpr double kOuterTolerance = 1e-7;
constexpr double kTailMass = 1e-10;

/// Probability that the range of k standard normals is at most w.
double normal_range_cdf(double w, int k) {
	if (w <= 0.0) {
		return 0.0;
	}
	const auto integrand = [w, k](double z) {
		const double inside = normal_cdf(z) - normal_cdf(z - w);
		return inside <= 0.0 ? 0.0 : normal_pdf(z) * std::pow(inside, k - 1);
	};
	const double v = static_cast<double>(k) * integrate(integrand, -8.5, 8.5, kInnerTolerance).value;
	return std::clamp(v, 0.0, 1.0);
}

} // namespace

double normal_cdf(double z) {
	return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double normal_sf(double z) {
	return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

double normal_pdf(double z) {
	return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double student_t_sf(double t, double df) {
	return boost::math::cdf(boost::math::complement(boost::math::students_t_distribution<double>(df), t));
}

double chi_squared_sf(double x, double df) {
	if (x <= 0.0) {
		return 1.0;
	}
	return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(df), x));
}

double f_sf(double f, double df1, double df2) {
	if (f <= 0.0) {
		return 1.0;
	}
	if (std::isinf(f)) {
		return 0.0;
	}
	return boost::math::cdf(boost::math::complement(boost::math::fisher_f_distribution<double>(df1, df2), f));
}

double studentized_range_cdf(double q, int k, double df) {
	if (k < 2) {
		throw PreconditionError("studentized range needs k >= 2");
	}
	if (!(df > 0.0)) {
		throw PreconditionError("studentized range needs df > 0");
	}
	if (q <= 0.0) {
		return 0.0;
	}
	if (std::isinf(q)) {
		return 1.0;
	}
	if (std::isinf(df)) {
		return normal_range_cdf(q, k);
	}
	// s = sqrt(chi^2_df / df); integrate the s density over its central mass
	const boost::math::chi_squared_distribution<double> chi(df);
	const double s_lo = std::sqrt(boost::math::quantile(chi, kTailMass) / df);
	const double s_hi = std::sqrt(boost::math::quantile(boost::math::complement(chi, kTailMass)) / df);
	const double log_norm = std::log(2.0) + 0.5 * df * std::log(0.5 * df) - std::lgamma(0.5 * df);
	const auto integrand = [&](double s) {
		if (s <= 0.0) {
			return 0.0;
		}
		const double log_density = log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s;
		return std::exp(log_density) * normal_range_cdf(q * s, k);
	};
	try {
		const double v = integrate(integrand, s_lo, s_hi, kOuterTolerance).value;
		return std::clamp(v, 0.0, 1.0);
	} catch (const Error &e) {
		throw Error("studentized range quadrature failed for q=" + format_double(q) + ", k=" + std::to_string(k) +
		            ", df=" + format_double(df) + ": " + e.what());
	}
}

double studentized_range_sf(double q, int k, double df) {
	return std::clamp(1.0 - studentized_range_cdf(q, k, df), 0.0, 1.0);
}

} // namespace defectcast::stats
