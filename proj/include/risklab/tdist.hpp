#pragma once

#include "risklab/common.hpp"

namespace risklab {

// Regularized incomplete beta I_x(a, b), a,b > 0, x in [0,1].
// Lentz continued fraction; absolute error well below 1e-12 over the
// parameter range the t tests use (df <= 1000).
double regularized_incomplete_beta(double a, double b, double x);

// Upper tail P(T > t) for Student's t with df degrees of freedom.
double t_sf(double t, int df);

double t_cdf(double t, int df);

// 2 * P(T > |t|).
double t_two_sided_p(double t, int df);

}  // namespace risklab
