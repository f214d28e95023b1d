#pragma once

namespace methsnp {

// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
double incomplete_beta(double a, double b, double x);

// P(F > x) for F ~ F(df1, df2).
double f_upper_tail(double x, double df1, double df2);

// P(|T| > |t|) for T ~ t(df).
double t_two_sided(double t, double df);

}  // namespace methsnp
