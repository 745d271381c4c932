#pragma once

namespace earstudy {

/// Regularized incomplete beta I_x(a, b) by continued fraction (modified
/// Lentz). `one_minus_x` is passed separately so callers can supply it
/// without cancellation.
double regularized_incomplete_beta(double a, double b, double x, double one_minus_x);
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided tail probability 2 * P(T_df > |t|) of Student's t.
double student_t_sf(double t, double df);

} // namespace earstudy
