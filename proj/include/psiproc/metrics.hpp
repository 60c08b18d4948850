#pragma once

#include "psiproc/choice_rule.hpp"
#include "psiproc/grid_function.hpp"

namespace psiproc {

// ||f|| = int_0^inf x^-2 |f(x)| dx, closed form on the piecewise-linear model;
// near-zero segment integrates the quadratic closure, tail adds tail_value/x_max
// (with the power-model correction when present). Throws if f(0) != 0.
double candy_norm(const GridFunction& f);

// ||F - G|| on a common grid; segments are split exactly at sign changes.
double d_candy(const GridFunction& F, const GridFunction& G);

// d(f,g) = sum_k 2^-k ^ int_0^k |f-g|, truncated at K = 30 (< 1e-9 truncation).
double d_l1loc(const GridFunction& F, const GridFunction& G);

// H(F) = int_0^inf log(x) dF(x), Stieltjes in closed form per segment.
double entropy_of(const GridFunction& F);

// D(F) = 1/2 int_0^inf z dPsi(F(z)), computed as 1/2 int (1 - Psi(F)) dz.
double drift_D(const ChoiceRule& rule, const GridFunction& F);

// int_0^inf F'(x)/x dx via the stored derivative (independent of the
// value-array route used by candy_norm); falls back to chord slopes.
double prob_normalization(const GridFunction& F);

// sup over the common grid of |F - G|.
double ks_distance(const GridFunction& F, const GridFunction& G);

// endpoint-corrected trapezoid of g over [xs[1], xs[n]] assuming the grid is
// uniform in log x (falls back to plain trapezoid otherwise); g given at nodes 1..n
double log_trapz_corrected(const Eigen::ArrayXd& xs, const Eigen::ArrayXd& g_at_nodes);

} // namespace psiproc
