#include "defectcast/stats/quadrature.hpp"

#include "defectcast/common.hpp"

#include <array>
#include <cmath>
#include <queue>

namespace defectcast::stats {

namespace {

// Kronrod nodes on [0, 1]; odd indices are the Gauss-Legendre 7-point nodes.
constexpr std::array<double, 8> kNodes{0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                       0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                       0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                       0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrod{0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                         0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                         0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                         0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGauss{0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
	double a, b, value, error;
	bool operator<(const Segment &o) const {
		return error < o.error;
	}
};

Segment gauss_kronrod(const std::function<double(double)> &f, double a, double b) {
	const double c = 0.5 * (a + b);
	const double half = 0.5 * (b - a);
	const double fc = f(c);
	double kronrod = kKronrod[7] * fc;
	double gauss = kGauss[3] * fc;
	for (std::size_t i = 0; i < 7; ++i) {
		const double dx = half * kNodes[i];
		const double sum = f(c - dx) + f(c + dx);
		kronrod += kKronrod[i] * sum;
		if (i % 2 == 1) {
			gauss += kGauss[i / 2] * sum;
		}
	}
	return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

} // namespace

QuadratureResult integrate(const std::function<double(double)> &f, double a, double b, double abs_tolerance,
                           int max_intervals) {
	std::priority_queue<Segment> heap;
	heap.push(gauss_kronrod(f, a, b));
	double value = heap.top().value;
	double error = heap.top().error;
	int evaluations = 15;
	int intervals = 1;
	while (error > abs_tolerance) {
		if (intervals >= max_intervals) {
			throw Error("adaptive quadrature on [" + format_double(a) + ", " + format_double(b) +
			            "] did not reach tolerance " + format_double(abs_tolerance) + " (error estimate " +
			            format_double(error) + ")");
		}
		const Segment worst = heap.top();
		heap.pop();
		const double mid = 0.5 * (worst.a + worst.b);
		const Segment left = gauss_kronrod(f, worst.a, mid);
		const Segment right = gauss_kronrod(f, mid, worst.b);
		evaluations += 30;
		++intervals;
		value += left.value + right.value - worst.value;
		error += left.error + right.error - worst.error;
		heap.push(left);
		heap.push(right);
		if (!std::isfinite(value)) {
			throw Error("adaptive quadrature produced a non-finite value");
		}
	}
	return {value, error, evaluations};
}

} // namespace defectcast::stats
