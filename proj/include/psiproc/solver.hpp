#pragma once

#include <vector>

#include "psiproc/choice_rule.hpp"
#include "psiproc/grid_function.hpp"

namespace psiproc {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolveOptions {
    int grid_points = 4096;
    double grid_min = 1e-4;
    double grid_max = 0.0;   // 0: 40 for light tails, 1e4 for min-k
    double tol = 1e-8;
    int max_outer = 200;
    int steps_per_unit_t = 0;  // 0: auto
};

struct SolveResult {
    GridFunction profile;                  // with derivative x*I(x)
    bool converged = false;
    int iterations = 0;
    std::vector<double> residual_history;  // d_candy between successive iterates
    double candy = 0.0;                    // int x^-2 F
    double prob_norm = 0.0;                // int F'/x
    double drift = 0.0;                    // D(F)
    double stationarity_residual = 0.0;    // d_candy(Phi(F), F), Phi the double integral
    double shooting_constant = 0.0;        // ode_solve only: c = F''(0+)
};

double default_grid_max(const ChoiceRule& rule);

// Limiting profile F^Psi as the attracting fixed point of the time-1 evolution
// map (an e^-1 contraction in the candy norm); iterates start from the
// size-biased exponential and stop when d_candy between successive iterates
// drops below tol. Throws SolverError on divergence; inspect `converged`
// for max-iteration exhaustion.
SolveResult fixed_point(const ChoiceRule& rule, SolveOptions opts = {});

// Phi(F)(x) = int_0^x y int_y^inf z^-1 dPsi(F(z)) dy; the stationarity
// certificate for solved profiles (F^Psi satisfies Phi(F) = F).
GridFunction picard_image(const ChoiceRule& rule, const GridFunction& F);

// Shooting on c = F''(0+) for x F'' - F' + x F' psi(F(x)) = 0: integrate
// outward from F ~ (c/2) x^2 and bisect on the total mass int F'/x dx = 1.
// Requires an absolutely continuous rule.
SolveResult ode_solve(const ChoiceRule& rule, SolveOptions opts = {});

struct PhaseOptions {
    double horizon = 80.0;
    double step = 2.5e-4;
};

struct PhaseResult {
    double g_infinity = 0.0;
    double launch_radius = 0.0;
    int bisection_iterations = 0;
    std::vector<std::array<double, 3>> trace;  // (t, G, G') samples of the final orbit
};

// Saddle value G(inf) of G'' - G' - (2k-1 - k(k-1)G^{k-1})(G'-G) = 0 along the
// orbit leaving the origin; compare against c_k = ((2k-1)/(k(k-1)))^{1/(k-1)}.
PhaseResult min_k_phase(double k, PhaseOptions opts = {});

// planar vector field of the autonomous system at (G, G')
std::array<double, 2> min_k_phase_field(double k, double g, double gp);

enum class TailModelKind { Max, Min };

struct TailFit {
    double slope = 0.0;      // max: = -psi(1); min: = -1/(k-1)
    double intercept = 0.0;  // max: log C
    double level = 0.0;      // min: c_k estimate
    int n_points = 0;
    double r_squared = 0.0;
};

// max: OLS of log(F'(x)/x) on x over the window; min: OLS of log(1-F) on log x.
TailFit tail_fit(const GridFunction& F, TailModelKind model, double window_lo,
                 double window_hi);

} // namespace psiproc
