#include "psiproc/evolution.hpp"

#include <cmath>
#include <stdexcept>

namespace psiproc {

namespace {

// by-parts value of int_a^b z^-1 dH with H linear between (a,Ha) and (b,Hb)
inline double seg_by_parts(double a, double b, double ha, double hb) {
    double s = (hb - ha) / (b - a);
    double c0 = ha - s * a;
    return hb / b - ha / a + c0 * (1.0 / a - 1.0 / b) + s * std::log(b / a);
}

Eigen::ArrayXd suffix_kakutani(const GridFunction& F) {
    const auto& xs = F.xs();
    const auto& v = F.values();
    const Eigen::Index n = xs.size();
    Eigen::ArrayXd I = Eigen::ArrayXd::Zero(n);
    // unit jump of Psi(F(z)) where F first reaches 1
    Eigen::Index j = 1;
    while (j < n && v[j] < 1.0) ++j;
    if (j == n) return I;  // crossing beyond the grid: convention zero
    double zstar;
    if (v[j - 1] >= 1.0 || v[j] == v[j - 1])
        zstar = xs[j - 1] > 0.0 ? xs[j - 1] : xs[j];
    else
        zstar = xs[j - 1] + (1.0 - v[j - 1]) / (v[j] - v[j - 1]) * (xs[j] - xs[j - 1]);
    for (Eigen::Index i = 0; i < n; ++i) I[i] = xs[i] < zstar ? 1.0 / zstar : 0.0;
    return I;
}

} // namespace

Eigen::ArrayXd suffix_psi_integral(const ChoiceRule& rule, const GridFunction& F) {
    if (rule.kind() == ChoiceRule::Kind::Kakutani) return suffix_kakutani(F);

    const auto& xs = F.xs();
    const auto& v = F.values();
    const Eigen::Index n = xs.size();
    Eigen::ArrayXd H(n);
    for (Eigen::Index i = 0; i < n; ++i) H[i] = rule.cdf(std::clamp(v[i], 0.0, 1.0));

    double tail_cap = std::clamp(F.tail_value(), 0.0, 1.0);
    double h_inf = rule.cdf(tail_cap);
    double tail_mass = std::max(0.0, h_inf - H[n - 1]);

    double itail = 0.0;
    const auto& tm = F.tail_model();
    if (tail_mass > 0.0 && tm.kind == TailModel::Kind::Power && v[n - 1] < tail_cap) {
        double level = (tail_cap - v[n - 1]) * std::pow(xs[n - 1], tm.exponent);
        constexpr int ext_pts = 1024;
        double z0 = xs[n - 1];
        double ratio = std::pow(1e8, 1.0 / (ext_pts - 1));
        double za = z0, fa = v[n - 1], ha = H[n - 1];
        for (int i = 1; i < ext_pts; ++i) {
            double zb = za * ratio;
            double fb = std::clamp(tail_cap - level * std::pow(zb, -tm.exponent), fa, tail_cap);
            double hb = rule.cdf(fb);
            itail += seg_by_parts(za, zb, ha, hb);
            za = zb;
            fa = fb;
            ha = hb;
        }
        itail += std::max(0.0, h_inf - ha) / za;
    } else {
        itail = tail_mass / xs[n - 1];
    }

    Eigen::ArrayXd I(n);
    I[n - 1] = itail;
    for (Eigen::Index i = n - 2; i >= 1; --i)
        I[i] = I[i + 1] + seg_by_parts(xs[i], xs[i + 1], H[i], H[i + 1]);
    I[0] = I[1] + 2.0 * H[1] / xs[1];
    return I;
}

GridFunction op_T(double t, const GridFunction& F) {
    if (t < 0.0) throw std::domain_error("op_T: t must be >= 0");
    const auto& xs = F.xs();
    double sc = std::exp(-t);
    Eigen::ArrayXd out(xs.size());
    out[0] = F.values()[0];
    for (Eigen::Index i = 1; i < xs.size(); ++i) out[i] = F.eval(xs[i] * sc);
    return GridFunction::raw(xs, std::move(out), F.q() * sc * sc, F.tail_value(),
                             F.tail_model());
}

GridFunction op_A(const ChoiceRule& rule, const GridFunction& F) {
    Eigen::ArrayXd I = suffix_psi_integral(rule, F);
    const auto& xs = F.xs();
    Eigen::ArrayXd out = xs.square() * I;
    double last = out[out.size() - 1];
    return GridFunction::raw(xs, std::move(out), I[0], last);
}

GridFunction op_S(const ChoiceRule& rule, const Trajectory& traj, double t) {
    if (traj.times.empty()) throw std::invalid_argument("op_S: empty trajectory");
    if (t > traj.times.back() + 1e-12)
        throw std::out_of_range("op_S: t beyond the stored trajectory");
    std::size_t m = 0;
    while (m + 1 < traj.times.size() && traj.times[m] < t - 1e-12) ++m;
    if (std::abs(traj.times[m] - t) > 1e-9)
        throw std::invalid_argument("op_S: t does not match a stored frame");

    GridFunction base = op_T(t, traj.frames.front());
    Eigen::ArrayXd acc = base.values();
    double q = base.q();
    if (m > 0) {
        for (std::size_t i = 0; i <= m; ++i) {
            double w;
            if (i == 0)
                w = 0.5 * (traj.times[1] - traj.times[0]);
            else if (i == m)
                w = 0.5 * (traj.times[m] - traj.times[m - 1]);
            else
                w = 0.5 * (traj.times[i + 1] - traj.times[i - 1]);
            GridFunction term = op_T(t - traj.times[i], op_A(rule, traj.frames[i]));
            acc += w * term.values();
            q += w * term.q();
        }
    }
    GridFunction out = GridFunction::raw(traj.frames.front().xs(), std::move(acc), q,
                                         traj.frames.front().tail_value(),
                                         traj.frames.front().tail_model());
    out.remonotonize();
    return out;
}

int auto_steps_per_unit(const ChoiceRule& rule) {
    double sup = rule.density_sup();
    if (!std::isfinite(sup)) return 256;
    return std::max(256, 16 * static_cast<int>(std::ceil(sup)));
}

Trajectory evolve(const ChoiceRule& rule, const GridFunction& F0, double T, int steps,
                  EvolveOptions opts) {
    if (!(T > 0.0) || steps < 1) throw std::invalid_argument("evolve: need T > 0, steps >= 1");
    int spu = opts.steps_per_unit_t > 0 ? opts.steps_per_unit_t : auto_steps_per_unit(rule);

    const auto& xs = F0.xs();
    TailModel model = F0.tail_model();
    if (model.kind == TailModel::Kind::None) {
        if (auto p = rule.limit_tail_exponent()) model = TailModel::power(0.0, *p);
    }

    // tilde state: F~_0 = F_0
    Eigen::ArrayXd v = F0.values();
    double q = F0.q();
    double tail = F0.tail_value();

    Trajectory traj;
    traj.times.reserve(steps + 1);
    traj.frames.reserve(steps + 1);
    traj.times.push_back(0.0);
    traj.frames.push_back(F0);
    if (opts.keep_tilde_frames) traj.tilde_frames.push_back(F0);

    auto rhs = [&](const Eigen::ArrayXd& state, double qq, Eigen::ArrayXd& out,
                   double& qdot) {
        GridFunction g = GridFunction::raw(xs, state, qq, tail, model);
        Eigen::ArrayXd I = suffix_psi_integral(rule, g);
        out = xs.square() * I;
        qdot = I[0];
    };

    Eigen::ArrayXd r1, r2, r3, r4, tmp;
    double worst = 0.0;
    for (int j = 1; j <= steps; ++j) {
        double t0 = T * (j - 1) / steps, t1 = T * j / steps;
        double s0 = std::exp(t0), s1 = std::exp(t1);
        int ns = std::max(8, static_cast<int>(std::ceil(spu * (t1 - t0))));
        double ds = (s1 - s0) / ns;
        for (int i = 0; i < ns; ++i) {
            double q1, q2, q3, q4;
            rhs(v, q, r1, q1);
            tmp = v + 0.5 * ds * r1;
            rhs(tmp, q + 0.5 * ds * q1, r2, q2);
            tmp = v + 0.5 * ds * r2;
            rhs(tmp, q + 0.5 * ds * q2, r3, q3);
            tmp = v + ds * r3;
            rhs(tmp, q + ds * q3, r4, q4);
            v += (ds / 6.0) * (r1 + 2.0 * r2 + 2.0 * r3 + r4);
            q += (ds / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
        }
        // repair + measure the per-frame violation
        GridFunction tilde = GridFunction::raw(xs, v, q, tail, model);
        double viol = tilde.remonotonize();
        worst = std::max(worst, viol);
        if (viol > opts.monotonicity_budget)
            throw RefinementRequest("evolve: monotonicity violated by " + std::to_string(viol) +
                                    " at t=" + std::to_string(t1) + "; reduce the step size");
        v = tilde.values();

        traj.times.push_back(t1);
        traj.frames.push_back(tilde.resample_scaled(std::exp(-t1)));
        if (opts.keep_tilde_frames) traj.tilde_frames.push_back(tilde);
    }
    traj.max_monotonicity_violation = worst;
    return traj;
}

} // namespace psiproc
