#pragma once

namespace smartpower {

/** Standard normal CDF, accurate to ~1e-15 via erfc. */
double norm_cdf(double z);

/** Standard normal quantile (Wichura's AS 241, double precision). */
double norm_quantile(double p);

/** Regularized upper incomplete gamma Q(a, x). */
double gamma_q(double a, double x);

/** Chi-square survival function with k degrees of freedom. */
double chi2_sf(double x, double k);

}  // namespace smartpower
