#pragma once

namespace prefkit {

// Standard normal distribution primitives used by the Thurstonian model.
//
// The CDF is built on Cody's rational Chebyshev approximations for erf/erfc
// (W. J. Cody, "Rational Chebyshev approximation for the error function",
// Math. Comp. 23 (1969), 631-638; coefficients from netlib specfun CALERF).
// Absolute error of the CDF is well below 1e-14 over the real line.

// Complementary error function, Cody's three-region scheme.
double erfc_cody(double x);

// Error function via the same scheme.
double erf_cody(double x);

// P(Z <= z) for Z ~ N(0,1). Throws prefkit::Error on non-finite input.
//
// Negative arguments are evaluated directly through erfc (relatively accurate
// tail); positive arguments as 1 - cdf(-z). The split makes
// cdf(z) + cdf(-z) == 1 hold exactly in double arithmetic.
double std_normal_cdf(double z);

// Density of N(0,1).
double std_normal_pdf(double z);

// Inverse CDF (Wichura's AS241 PPND16 rational approximation, relative error
// below 1e-15). Requires p in (0, 1).
double std_normal_quantile(double p);

}  // namespace prefkit
