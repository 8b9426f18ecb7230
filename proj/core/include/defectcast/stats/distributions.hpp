#pragma once

namespace defectcast::stats {

double normal_cdf(double z);
double normal_sf(double z);
double normal_pdf(double z);
double student_t_sf(double t, double df);
double chi_squared_sf(double x, double df);
double f_sf(double f, double df1, double df2);

/// P(Q <= q) for the range of k standard normals divided by an independent
/// sqrt(chi^2_df / df). An infinite df gives the plain normal range.
double studentized_range_cdf(double q, int k, double df);
double studentized_range_sf(double q, int k, double df);

} // namespace defectcast::stats
