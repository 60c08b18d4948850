#include "psiproc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psiproc/evolution.hpp"
#include "psiproc/metrics.hpp"

namespace psiproc {

double default_grid_max(const ChoiceRule& rule) {
    return rule.limit_tail_exponent() ? 1e4 : 40.0;
}

namespace {

GridFunction initial_guess(const Eigen::ArrayXd& xs, const ChoiceRule& rule) {
    GridFunction g = GridFunction::size_biased_exponential(xs);
    if (auto p = rule.limit_tail_exponent()) g.set_tail_model(TailModel::power(0.0, *p));
    return g;
}

void attach_derivative(const ChoiceRule& rule, GridFunction& F) {
    Eigen::ArrayXd I = suffix_psi_integral(rule, F);
    Eigen::ArrayXd d = F.xs() * I;
    d[0] = 0.0;
    F.set_derivative(std::move(d));
}

void fill_diagnostics(const ChoiceRule& rule, SolveResult& res) {
    attach_derivative(rule, res.profile);
    res.candy = candy_norm(res.profile);
    res.prob_norm = prob_normalization(res.profile);
    res.drift = drift_D(rule, res.profile);
    res.stationarity_residual = d_candy(picard_image(rule, res.profile), res.profile);
}

} // namespace

GridFunction picard_image(const ChoiceRule& rule, const GridFunction& F) {
    const auto& xs = F.xs();
    const Eigen::Index n = xs.size();
    Eigen::ArrayXd I = suffix_psi_integral(rule, F);
    Eigen::ArrayXd out(n);
    out[0] = 0.0;
    // int_0^x1 y I(y) dy with I linear on [0, x1]
    out[1] = I[0] * xs[1] * xs[1] / 2.0 + (I[1] - I[0]) * xs[1] * xs[1] / 3.0;
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        double a = xs[i], b = xs[i + 1];
        double s = (I[i + 1] - I[i]) / (b - a);
        double seg = I[i] * (b * b - a * a) / 2.0 +
                     s * ((b * b * b - a * a * a) / 3.0 - a * (b * b - a * a) / 2.0);
        out[i + 1] = out[i] + seg;
    }
    GridFunction g = GridFunction::raw(xs, std::move(out), I[0] / 2.0,
                                       std::max(F.tail_value(), out[n - 1]), F.tail_model());
    return g;
}

SolveResult fixed_point(const ChoiceRule& rule, SolveOptions opts) {
    if (opts.grid_max <= 0.0) opts.grid_max = default_grid_max(rule);
    Eigen::ArrayXd xs = GridFunction::geometric_grid(opts.grid_min, opts.grid_max,
                                                     opts.grid_points);
    GridFunction F = initial_guess(xs, rule);

    EvolveOptions eopts;
    eopts.steps_per_unit_t = opts.steps_per_unit_t;
    eopts.keep_tilde_frames = false;

    SolveResult res;
    double best = std::numeric_limits<double>::infinity();
    for (int m = 1; m <= opts.max_outer; ++m) {
        Trajectory leg = evolve(rule, F, 1.0, 1, eopts);
        GridFunction next = std::move(leg.frames.back());
        next.set_tail_model(F.tail_model());
        double r = d_candy(next, F);
        res.residual_history.push_back(r);
        res.iterations = m;
        F = std::move(next);
        if (r < opts.tol) {
            res.converged = true;
            break;
        }
        best = std::min(best, r);
        if (m > 20 && r > 50.0 * best)
            throw SolverError("fixed_point: candy residual diverging (" + std::to_string(r) +
                              " after " + std::to_string(m) + " iterations)");
    }

    // pin int x^-2 F = 1 exactly: candy(F(lambda x)) = lambda candy(F)
    double lam = 1.0 / candy_norm(F);
    F = F.resample_scaled(lam);
    res.profile = std::move(F);
    fill_diagnostics(rule, res);
    return res;
}

SolveResult ode_solve(const ChoiceRule& rule, SolveOptions opts) {
    if (!rule.has_density())
        throw std::invalid_argument("ode_solve: rule has no density (" + rule.label() + ")");
    if (opts.grid_max <= 0.0) opts.grid_max = default_grid_max(rule);
    Eigen::ArrayXd xs = GridFunction::geometric_grid(opts.grid_min, opts.grid_max,
                                                     opts.grid_points);
    const Eigen::Index n = xs.size();

    auto psi = [&](double f) { return *rule.density(std::clamp(f, 0.0, 1.0)); };

    // state (F, F', mass = int F'/x); returns mass and fills values/derivs
    auto integrate = [&](double c, Eigen::ArrayXd* vals, Eigen::ArrayXd* derivs) {
        double x0 = xs[1];
        double F = 0.5 * c * x0 * x0, Fp = c * x0, mass = c * x0;
        if (vals) (*vals)[0] = 0.0, (*vals)[1] = F;
        if (derivs) (*derivs)[0] = 0.0, (*derivs)[1] = Fp;
        bool saturated = false;
        for (Eigen::Index i = 1; i + 1 < n; ++i) {
            if (!saturated) {
                constexpr int substeps = 2;
                double h = (xs[i + 1] - xs[i]) / substeps;
                double x = xs[i];
                for (int s = 0; s < substeps && !saturated; ++s) {
                    auto f = [&](double xx, double Fv, double Fpv, double& dF, double& dFp,
                                 double& dm) {
                        dF = Fpv;
                        dFp = Fpv * (1.0 / xx - psi(Fv));
                        dm = Fpv / xx;
                    };
                    double k1F, k1P, k1M, k2F, k2P, k2M, k3F, k3P, k3M, k4F, k4P, k4M;
                    f(x, F, Fp, k1F, k1P, k1M);
                    f(x + h / 2, F + h / 2 * k1F, Fp + h / 2 * k1P, k2F, k2P, k2M);
                    f(x + h / 2, F + h / 2 * k2F, Fp + h / 2 * k2P, k3F, k3P, k3M);
                    f(x + h, F + h * k3F, Fp + h * k3P, k4F, k4P, k4M);
                    F += h / 6 * (k1F + 2 * k2F + 2 * k3F + k4F);
                    Fp += h / 6 * (k1P + 2 * k2P + 2 * k3P + k4P);
                    mass += h / 6 * (k1M + 2 * k2M + 2 * k3M + k4M);
                    x += h;
                    if (F >= 1.0) {
                        F = 1.0;
                        Fp = 0.0;
                        saturated = true;
                    }
                }
            }
            if (vals) (*vals)[i + 1] = F;
            if (derivs) (*derivs)[i + 1] = Fp;
        }
        return mass;
    };

    // expanding bracket on mass(c) - 1
    double lo = 1.0, hi = 1.0;
    double mlo = integrate(lo, nullptr, nullptr);
    double mhi = mlo;
    for (int tries = 0; mlo >= 1.0 && tries < 40; ++tries) {
        lo /= 4.0;
        mlo = integrate(lo, nullptr, nullptr);
    }
    for (int tries = 0; mhi < 1.0 && tries < 40; ++tries) {
        hi *= 4.0;
        mhi = integrate(hi, nullptr, nullptr);
    }
    if (mlo >= 1.0 || mhi < 1.0)
        throw SolverError("ode_solve: bracketing failure, no sign change in the mass criterion");

    SolveResult res;
    for (int it = 0; it < 100; ++it) {
        double mid = std::sqrt(lo * hi);
        double m = integrate(mid, nullptr, nullptr);
        (m < 1.0 ? lo : hi) = mid;
        res.residual_history.push_back(std::abs(m - 1.0));
        res.iterations = it + 1;
        if (hi / lo < 1.0 + 1e-14) break;
    }
    double c = std::sqrt(lo * hi);
    res.shooting_constant = c;
    res.converged = true;

    Eigen::ArrayXd vals(n), derivs(n);
    integrate(c, &vals, &derivs);
    GridFunction profile = GridFunction::raw(xs, std::move(vals), c / 2.0, 1.0,
                                             rule.limit_tail_exponent()
                                                 ? TailModel::power(0.0, *rule.limit_tail_exponent())
                                                 : TailModel::none());
    profile.remonotonize();
    profile.set_derivative(std::move(derivs));
    res.profile = std::move(profile);

    res.candy = candy_norm(res.profile);
    res.prob_norm = prob_normalization(res.profile);
    res.drift = drift_D(rule, res.profile);
    res.stationarity_residual = d_candy(picard_image(rule, res.profile), res.profile);
    return res;
}

std::array<double, 2> min_k_phase_field(double k, double g, double gp) {
    double coeff = (2.0 * k - 1.0) - k * (k - 1.0) * std::pow(g, k - 1.0);
    return {gp, gp + coeff * (gp - g)};
}

PhaseResult min_k_phase(double k, PhaseOptions opts) {
    if (!(k > 1.0)) throw std::invalid_argument("min_k_phase: need k > 1");
    const double h = opts.step;
    // the deviation of the heteroclinic from the invariant line P = G scales
    // like eps^{2k-2}; keep it representable in doubles
    const double eps = std::max(1e-4, std::pow(10.0, -10.0 / (2.0 * k - 2.0)));

    struct Probe {
        int outcome;  // -1 turned down, +1 escaped, 0 horizon reached
        double g_best;
    };
    auto probe = [&](double delta, std::vector<std::array<double, 3>>* trace) -> Probe {
        double g = eps, p = eps * (1.0 + delta);
        double pmax = 0.0, pbest = std::numeric_limits<double>::infinity();
        double gbest = g;
        bool have_best = false;
        double t = 0.0;
        double next_sample = 0.0;
        while (t < opts.horizon) {
            if (trace && t >= next_sample) {
                trace->push_back({t, g, p});
                next_sample += 0.05;
            }
            double gp, pp;
            auto f = [&](double gg, double pq, double& dg, double& dp) {
                auto v = min_k_phase_field(k, gg, pq);
                dg = v[0];
                dp = v[1];
            };
            double k1g, k1p, k2g, k2p, k3g, k3p, k4g, k4p;
            f(g, p, k1g, k1p);
            f(g + h / 2 * k1g, p + h / 2 * k1p, k2g, k2p);
            f(g + h / 2 * k2g, p + h / 2 * k2p, k3g, k3p);
            f(g + h * k3g, p + h * k3p, k4g, k4p);
            gp = g + h / 6 * (k1g + 2 * k2g + 2 * k3g + k4g);
            pp = p + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p);
            g = gp;
            p = pp;
            t += h;
            pmax = std::max(pmax, p);
            if (p < 0.5 * pmax && std::abs(p) < pbest) {
                pbest = std::abs(p);
                gbest = g;
                have_best = true;
            }
            if (p < 0.0) {
                // linear interpolation of the P = 0 crossing
                return {-1, have_best ? gbest : g};
            }
            if (p > 3.0 * pmax * 0.999 && have_best) return {+1, gbest};
            if (p > 1e3 || g > 1e3) return {+1, have_best ? gbest : g};
        }
        return {0, have_best ? gbest : g};
    };

    double lo = -0.9, hi = 0.9;
    Probe plo = probe(lo, nullptr);
    Probe phi = probe(hi, nullptr);
    PhaseResult res;
    res.launch_radius = eps;
    if (plo.outcome == phi.outcome) {
        // no separatrix bracket; report the straight launch
        Probe p0 = probe(0.0, &res.trace);
        res.g_infinity = p0.g_best;
        return res;
    }
    double g_down = std::numeric_limits<double>::quiet_NaN();
    double g_up = std::numeric_limits<double>::quiet_NaN();
    double mid = 0.0;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        Probe pm = probe(mid, nullptr);
        res.bisection_iterations = it + 1;
        if (pm.outcome == 0) {
            g_down = g_up = pm.g_best;
            break;
        }
        if (pm.outcome == -1)
            g_down = pm.g_best;
        else
            g_up = pm.g_best;
        if (pm.outcome == plo.outcome)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-16) break;
    }
    probe(mid, &res.trace);
    if (std::isnan(g_down))
        res.g_infinity = g_up;
    else if (std::isnan(g_up))
        res.g_infinity = g_down;
    else
        res.g_infinity = 0.5 * (g_down + g_up);
    return res;
}

TailFit tail_fit(const GridFunction& F, TailModelKind model, double window_lo,
                 double window_hi) {
    if (!(window_lo > 0.0) || !(window_hi > window_lo))
        throw std::invalid_argument("tail_fit: bad window");
    if (window_lo < F.x_min() || window_hi > F.x_max())
        throw std::invalid_argument("tail_fit: window outside the grid");
    const auto& xs = F.xs();
    const auto& v = F.values();
    const Eigen::Index n = xs.size();

    std::vector<double> X, Y;
    for (Eigen::Index i = 1; i < n; ++i) {
        if (xs[i] < window_lo || xs[i] > window_hi) continue;
        if (model == TailModelKind::Max) {
            double fp;
            if (F.has_derivative())
                fp = F.derivative()[i];
            else if (i + 1 < n)
                fp = (v[i + 1] - v[i - 1]) / (xs[i + 1] - xs[i - 1]);
            else
                continue;
            if (!(fp > 0.0))
                throw std::invalid_argument("tail_fit: nonpositive derivative in window");
            X.push_back(xs[i]);
            Y.push_back(std::log(fp / xs[i]));
        } else {
            double w = 1.0 - v[i];
            if (w < 1e-14)
                throw std::invalid_argument("tail_fit: 1-F below 1e-14 in window");
            X.push_back(std::log(xs[i]));
            Y.push_back(std::log(w));
        }
    }
    if (X.size() < 3) throw std::invalid_argument("tail_fit: fewer than 3 points in window");

    double mx = 0, my = 0;
    for (std::size_t i = 0; i < X.size(); ++i) mx += X[i], my += Y[i];
    mx /= X.size();
    my /= X.size();
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        sxx += (X[i] - mx) * (X[i] - mx);
        sxy += (X[i] - mx) * (Y[i] - my);
        syy += (Y[i] - my) * (Y[i] - my);
    }
    TailFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.n_points = static_cast<int>(X.size());
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    if (model == TailModelKind::Min) {
        // geometric-mean level under the fitted exponent
        double p = -fit.slope;
        double acc = 0.0;
        for (std::size_t i = 0; i < X.size(); ++i) acc += Y[i] + p * X[i];
        fit.level = std::exp(acc / X.size());
    } else {
        fit.level = std::exp(fit.intercept);
    }
    return fit;
}

} // namespace psiproc
