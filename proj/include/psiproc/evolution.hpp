#pragma once

#include "psiproc/choice_rule.hpp"
#include "psiproc/grid_function.hpp"

namespace psiproc {

// raised when a step size cannot keep frames monotone within budget
struct RefinementRequest : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// I(x_j) = int_{x_j}^inf z^-1 dPsi(F(z)). Continuous rules integrate by parts
// per segment with Psi(F) linearized between nodes; Kakutani places its unit
// jump exactly where F crosses 1. I[0] adds the [0, x1] closure 2 Psi(F(x1))/x1.
// Mass beyond the grid closes through the power tail model when present,
// otherwise as a point mass at x_max.
Eigen::ArrayXd suffix_psi_integral(const ChoiceRule& rule, const GridFunction& F);

// T_t F(x) = F(e^-t x); q scales by e^-2t
GridFunction op_T(double t, const GridFunction& F);

// A F(x) = x^2 int_x^inf z^-1 dPsi(F(z)); raw payload with q = I(0)
GridFunction op_A(const ChoiceRule& rule, const GridFunction& F);

// S(F)_t = T_t F_0 + int_0^t T_{t-s} A F_s ds, composite trapezoid over the
// stored frames; t must match a stored frame time
GridFunction op_S(const ChoiceRule& rule, const Trajectory& traj, double t);

struct EvolveOptions {
    int steps_per_unit_t = 0;            // 0: auto from the rule's density sup
    double monotonicity_budget = 1e-8;   // largest tolerated downward violation
    bool keep_tilde_frames = true;
};

// Integrates the deterministic evolution from F_0 over [0, T], frames at
// t_j = j T / steps. Internally steps sigma = e^t with classical RK4 on
// dF~/dsigma = x^2 I[F~](x) (the e^t factor removed exactly), then maps back
// F_t(x) = F~_t(e^-t x).
Trajectory evolve(const ChoiceRule& rule, const GridFunction& F0, double T, int steps,
                  EvolveOptions opts = {});

int auto_steps_per_unit(const ChoiceRule& rule);

} // namespace psiproc
