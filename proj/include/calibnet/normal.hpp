#pragma once

namespace calibnet {

// Phi(x), standard normal CDF, evaluated through erfc for tail accuracy.
double standard_normal_cdf(double x);

// phi(x), standard normal density.
double standard_normal_pdf(double x);

// Phi^{-1}(q) for q in (0,1). Rational initial estimate (Acklam 2003)
// refined with one Newton step against the CDF; absolute error below 1e-8
// over the whole open interval. Throws outside (0,1).
double standard_normal_quantile(double q);

}  // namespace calibnet
