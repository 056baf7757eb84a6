#include "prefkit/normal.hpp"

#include <cmath>

#include "prefkit/common.hpp"

namespace prefkit {

namespace {

// netlib specfun CALERF coefficient sets.
constexpr double kA[5] = {3.16112374387056560e0, 1.13864154151050156e2,
                          3.77485237685302021e2, 3.20937758913846947e3,
                          1.85777706184603153e-1};
constexpr double kB[4] = {2.36012909523441209e1, 2.44024637934444173e2,
                          1.28261652607737228e3, 2.84423683343917062e3};
constexpr double kC[9] = {5.64188496988670089e-1, 8.88314979438837594e0,
                          6.61191906371416295e1,  2.98635138197400131e2,
                          8.81952221241769090e2,  1.71204761263407058e3,
                          2.05107837782607147e3,  1.23033935479799725e3,
                          2.15311535474403846e-8};
constexpr double kD[8] = {1.57449261107098347e1, 1.17693950891312499e2,
                          5.37181101862009858e2, 1.62138957456669019e3,
                          3.29079923573345963e3, 4.36261909014324716e3,
                          3.43936767414372164e3, 1.23033935480374942e3};
constexpr double kP[6] = {3.05326634961232344e-1, 3.60344899949804439e-1,
                          1.25781726111229246e-1, 1.60837851487422766e-2,
                          6.58749161529837803e-4, 1.63153871373020978e-2};
constexpr double kQ[5] = {2.56852019228982242e0,  1.87295284992346047e0,
                          5.27905102951428412e-1, 6.05183413124413191e-2,
                          2.33520497626869185e-3};

constexpr double kSqrtPiInv = 5.6418958354775628695e-1;  // 1/sqrt(pi)
constexpr double kThresh = 0.46875;
constexpr double kXBig = 26.543;  // erfc underflows beyond this

// erfc(x) for x > kThresh, via exp(-x^2) * R(x). The x^2 split through a
// 1/16-truncated value keeps exp(-x^2) accurate for large x.
double erfc_tail(double x) {
  double result;
  if (x <= 4.0) {
    double xnum = kC[8] * x;
    double xden = x;
    for (int i = 0; i < 7; ++i) {
      xnum = (xnum + kC[i]) * x;
      xden = (xden + kD[i]) * x;
    }
    result = (xnum + kC[7]) / (xden + kD[7]);
  } else {
    if (x >= kXBig) return 0.0;
    const double inv2 = 1.0 / (x * x);
    double xnum = kP[5] * inv2;
    double xden = inv2;
    for (int i = 0; i < 4; ++i) {
      xnum = (xnum + kP[i]) * inv2;
      xden = (xden + kQ[i]) * inv2;
    }
    result = inv2 * (xnum + kP[4]) / (xden + kQ[4]);
    result = (kSqrtPiInv - result) / x;
  }
  const double ysq = std::trunc(x * 16.0) / 16.0;
  const double del = (x - ysq) * (x + ysq);
  return std::exp(-ysq * ysq) * std::exp(-del) * result;
}

}  // namespace

double erf_cody(double x) {
  const double y = std::fabs(x);
  if (y <= kThresh) {
    const double ysq = y > 1.11e-16 ? y * y : 0.0;
    double xnum = kA[4] * ysq;
    double xden = ysq;
    for (int i = 0; i < 3; ++i) {
      xnum = (xnum + kA[i]) * ysq;
      xden = (xden + kB[i]) * ysq;
    }
    return x * (xnum + kA[3]) / (xden + kB[3]);
  }
  const double one_minus = 1.0 - erfc_tail(y);
  return x < 0 ? -one_minus : one_minus;
}

double erfc_cody(double x) {
  const double y = std::fabs(x);
  double result;
  if (y <= kThresh) {
    result = 1.0 - erf_cody(y);
  } else {
    result = erfc_tail(y);
  }
  return x < 0 ? 2.0 - result : result;
}

double std_normal_cdf(double z) {
  if (!std::isfinite(z)) throw Error("std_normal_cdf: non-finite argument");
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  if (z < 0.0) return 0.5 * erfc_cody(-z * kInvSqrt2);
  return 1.0 - 0.5 * erfc_cody(z * kInvSqrt2);
}

double std_normal_pdf(double z) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw Error("std_normal_quantile: p must lie in (0, 1)");
  // AS241 PPND16 (Wichura 1988).
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) *
                    r +
                4.5921953931549871457e4) *
                   r +
               1.3731693765509461125e4) *
                  r +
              1.9715909503065514427e3) *
                 r +
             1.3314166789178437745e2) *
                r +
            3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) *
                    r +
                2.1213794301586595867e4) *
                   r +
               5.3941960214247511077e3) *
                  r +
              6.8718700749205790830e2) *
                 r +
             4.2313330701600911252e1) *
                r +
            1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) *
                    r +
                2.41780725177450611770e-1) *
                   r +
               1.27045825245236838258e0) *
                  r +
              3.64784832476320460504e0) *
                 r +
             5.76949722146069140550e0) *
                r +
            4.63033784615654529590e0) *
               r +
           1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) *
                    r +
                1.51986665636164571966e-2) *
                   r +
               1.48103976427480074590e-1) *
                  r +
              6.89767334985100004550e-1) *
                 r +
             1.67638483018380384940e0) *
                r +
            2.05319162663775882187e0) *
               r +
           1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) *
                    r +
                1.24266094738807843860e-3) *
                   r +
               2.65321895265761230930e-2) *
                  r +
              2.96560571828504891230e-1) *
                 r +
             1.78482653991729133580e0) *
                r +
            5.46378491116411436990e0) *
               r +
           6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) *
                    r +
                1.84631831751005468180e-5) *
                   r +
               7.86869131145613259100e-4) *
                  r +
              1.48753612908506148525e-2) *
                 r +
             1.36929880922735805310e-1) *
                r +
            5.99832206555887937690e-1) *
               r +
           1.0);
  }
  return q < 0.0 ? -val : val;
}

}  // namespace prefkit
