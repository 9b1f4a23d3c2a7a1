#pragma once

namespace shiftdiag::special {

// Regularized incomplete beta I_x(a, b), evaluated with the modified Lentz
// continued fraction until successive factors differ from 1 by < 1e-12.
double incomplete_beta(double a, double b, double x);

// P(F <= f) for an F(d1, d2) variable.
double f_cdf(double f, double d1, double d2);

// Q(lambda) = P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

// P(|Z| >= z) for standard normal Z.
double normal_two_sided(double z);

}  // namespace shiftdiag::special
