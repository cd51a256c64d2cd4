#pragma once

namespace zest {

// Standard normal density.
double normal_pdf(double z);

// Standard normal CDF via erfc.
double normal_cdf(double z);

// Standard normal quantile. Rational approximation refined with one Halley
// step against erfc, accurate to ~1e-15 over (0, 1).
double normal_quantile(double p);

// Regularized incomplete beta function I_x(a, b), continued-fraction
// evaluation. a, b > 0 and x in [0, 1].
double incomplete_beta(double a, double b, double x);

// Student's t density with `dof` degrees of freedom.
double student_t_pdf(double t, double dof);

// Student's t CDF.
double student_t_cdf(double t, double dof);

// Exact Student's t quantile. Closed forms for dof 1 and 2, otherwise a
// bracketed Newton inversion of the CDF; absolute error below 1e-12 over the
// levels used here.
double student_t_quantile(double dof, double p);

}  // namespace zest
