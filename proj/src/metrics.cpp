#include "psiproc/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace psiproc {

namespace {

// int_a^b x^-2 |f| dx for linear f with f(a)=fa, f(b)=fb, split at sign changes
double segment_abs_weighted(double a, double b, double fa, double fb) {
    auto piece = [](double a, double b, double fa, double s) {
        double c0 = fa - s * a;
        return c0 * (1.0 / a - 1.0 / b) + s * std::log(b / a);
    };
    double s = (fb - fa) / (b - a);
    if (fa * fb < 0.0) {
        double x0 = a - fa / s;
        x0 = std::clamp(x0, a, b);
        return std::abs(piece(a, x0, fa, s)) + std::abs(piece(x0, b, 0.0, s));
    }
    return std::abs(piece(a, b, fa, s));
}

double power_tail_level(const GridFunction& f) {
    const auto& m = f.tail_model();
    double gap = f.tail_value() - f.values()[f.size() - 1];
    if (m.kind != TailModel::Kind::Power || gap <= 0.0) return 0.0;
    return gap * std::pow(f.x_max(), m.exponent);
}

} // namespace

double candy_norm(const GridFunction& f) {
    const auto& xs = f.xs();
    const auto& v = f.values();
    const Eigen::Index n = xs.size();
    if (v[0] != 0.0)
        throw std::domain_error("candy_norm: f(0) != 0, integral diverges at the origin");
    double total = std::abs(f.q()) * xs[1];
    for (Eigen::Index i = 1; i + 1 < n; ++i)
        total += segment_abs_weighted(xs[i], xs[i + 1], v[i], v[i + 1]);
    total += std::abs(f.tail_value()) / xs[n - 1];
    if (f.tail_model().kind == TailModel::Kind::Power) {
        // int_xmax^inf x^-2 (tail - F) dx under 1-F ~ level x^-p
        double level = power_tail_level(f);
        double p = f.tail_model().exponent;
        total -= level * std::pow(xs[n - 1], -p - 1.0) / (p + 1.0);
    }
    return total;
}

double d_candy(const GridFunction& F, const GridFunction& G) {
    if (!F.same_grid(G)) throw std::invalid_argument("d_candy: grids differ");
    const auto& xs = F.xs();
    const auto& a = F.values();
    const auto& b = G.values();
    const Eigen::Index n = xs.size();
    if (a[0] != b[0])
        throw std::domain_error("d_candy: difference nonzero at the origin");
    double total = std::abs(F.q() - G.q()) * xs[1];
    for (Eigen::Index i = 1; i + 1 < n; ++i)
        total += segment_abs_weighted(xs[i], xs[i + 1], a[i] - b[i], a[i + 1] - b[i + 1]);
    total += std::abs(F.tail_value() - G.tail_value()) / xs[n - 1];
    return total;
}

double d_l1loc(const GridFunction& F, const GridFunction& G) {
    if (!F.same_grid(G)) throw std::invalid_argument("d_l1loc: grids differ");
    constexpr int K = 30;
    const auto& xs = F.xs();
    const Eigen::Index n = xs.size();
    Eigen::ArrayXd ad = (F.values() - G.values()).abs();
    // cumulative trapezoid of |F-G| at nodes; near-zero uses the quadratic closures
    Eigen::ArrayXd cum(n);
    cum[0] = 0.0;
    cum[1] = std::abs(F.q() - G.q()) * xs[1] * xs[1] * xs[1] / 3.0;
    for (Eigen::Index i = 2; i < n; ++i)
        cum[i] = cum[i - 1] + 0.5 * (ad[i] + ad[i - 1]) * (xs[i] - xs[i - 1]);
    double dtail = std::abs(F.tail_value() - G.tail_value());

    auto integral_to = [&](double cut) {
        if (cut >= xs[n - 1]) return cum[n - 1] + dtail * (cut - xs[n - 1]);
        const double* beg = xs.data();
        auto it = std::upper_bound(beg, beg + n, cut);
        Eigen::Index i = it - beg;  // xs[i-1] <= cut < xs[i]
        double t = (cut - xs[i - 1]) / (xs[i] - xs[i - 1]);
        double ad_cut = ad[i - 1] + t * (ad[i] - ad[i - 1]);
        return cum[i - 1] + 0.5 * (ad[i - 1] + ad_cut) * (cut - xs[i - 1]);
    };

    double total = 0.0;
    for (int k = 1; k <= K; ++k)
        total += std::min(std::ldexp(1.0, -k), integral_to(static_cast<double>(k)));
    return total;
}

double entropy_of(const GridFunction& F) {
    const auto& xs = F.xs();
    const auto& v = F.values();
    const Eigen::Index n = xs.size();
    // near zero: dF = 2qz dz, int log(z) 2qz dz = q x1^2 (log x1 - 1/2)
    double total = F.q() * xs[1] * xs[1] * (std::log(xs[1]) - 0.5);
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        double a = xs[i], b = xs[i + 1];
        double s = (v[i + 1] - v[i]) / (b - a);
        total += s * ((b * std::log(b) - b) - (a * std::log(a) - a));
    }
    double mass = F.tail_value() - v[n - 1];
    if (mass > 0.0) {
        if (F.tail_model().kind == TailModel::Kind::Power) {
            double p = F.tail_model().exponent;
            double level = power_tail_level(F);
            total += level * std::pow(xs[n - 1], -p) * (std::log(xs[n - 1]) + 1.0 / p);
        } else {
            total += mass * std::log(xs[n - 1]);
        }
    }
    if (!std::isfinite(total))
        throw std::domain_error("entropy_of: integral diverges");
    return total;
}

double log_trapz_corrected(const Eigen::ArrayXd& xs, const Eigen::ArrayXd& g) {
    const Eigen::Index n = xs.size();
    if (g.size() != n - 1) throw std::invalid_argument("log_trapz_corrected: size mismatch");
    // check log uniformity of nodes 1..n-1
    double h = std::log(xs[2] / xs[1]);
    bool uniform = true;
    for (Eigen::Index i = 2; i + 1 < n; ++i)
        if (std::abs(std::log(xs[i + 1] / xs[i]) - h) > 1e-9 * h) {
            uniform = false;
            break;
        }
    if (!uniform || n < 6) {
        double t = 0.0;
        for (Eigen::Index i = 0; i + 2 < n; ++i)
            t += 0.5 * (g[i] + g[i + 1]) * (xs[i + 2] - xs[i + 1]);
        return t;
    }
    // substitute w = log x: int g dx = int g(e^w) e^w dw with uniform w spacing
    Eigen::ArrayXd G = g * xs.tail(n - 1);
    double T = h * (G.sum() - 0.5 * G[0] - 0.5 * G[G.size() - 1]);
    double dGa = (-3.0 * G[0] + 4.0 * G[1] - G[2]) / (2.0 * h);
    double dGb = (3.0 * G[G.size() - 1] - 4.0 * G[G.size() - 2] + G[G.size() - 3]) / (2.0 * h);
    return T - h * h / 12.0 * (dGb - dGa);
}

double drift_D(const ChoiceRule& rule, const GridFunction& F) {
    const auto& xs = F.xs();
    const auto& v = F.values();
    const Eigen::Index n = xs.size();
    Eigen::ArrayXd one_minus_h(n - 1);
    for (Eigen::Index i = 1; i < n; ++i)
        one_minus_h[i - 1] = 1.0 - rule.cdf(std::clamp(v[i], 0.0, 1.0));
    double total = log_trapz_corrected(xs, one_minus_h);
    // [0, x1]: H ~ H(x1) (z/x1)^2
    double h1 = rule.cdf(std::clamp(v[1], 0.0, 1.0));
    total += xs[1] - h1 * xs[1] / 3.0;
    // tail
    double gap = F.tail_value() - v[n - 1];
    if (gap > 0.0) {
        if (F.tail_model().kind == TailModel::Kind::Power &&
            rule.kind() == ChoiceRule::Kind::MinK) {
            // 1 - Psi(F) = (1-F)^k = level^k z^-pk exactly for min-k
            double p = F.tail_model().exponent;
            double level = power_tail_level(F);
            double pk = p * rule.k();
            if (pk > 1.0)
                total += std::pow(level, rule.k()) * std::pow(xs[n - 1], 1.0 - pk) / (pk - 1.0);
        } else {
            total += one_minus_h[n - 2] * xs[n - 1];
        }
    }
    if (!std::isfinite(total))
        throw std::domain_error("drift_D: integral diverges (tail closure missing)");
    return 0.5 * total;
}

double prob_normalization(const GridFunction& F) {
    const auto& xs = F.xs();
    const Eigen::Index n = xs.size();
    double total;
    if (F.has_derivative()) {
        const auto& d = F.derivative();
        Eigen::ArrayXd g(n - 1);
        for (Eigen::Index i = 1; i < n; ++i) g[i - 1] = d[i] / xs[i];
        total = log_trapz_corrected(xs, g);
        total += 0.5 * (2.0 * F.q() + d[1] / xs[1]) * xs[1];  // F'/x -> 2q at 0
    } else {
        const auto& v = F.values();
        total = 2.0 * F.q() * xs[1];
        for (Eigen::Index i = 1; i + 1 < n; ++i)
            total += (v[i + 1] - v[i]) / (xs[i + 1] - xs[i]) * std::log(xs[i + 1] / xs[i]);
    }
    double gap = F.tail_value() - F.values()[n - 1];
    if (gap > 0.0) {
        if (F.tail_model().kind == TailModel::Kind::Power) {
            double p = F.tail_model().exponent;
            double level = power_tail_level(F);
            total += p * level / (p + 1.0) * std::pow(xs[n - 1], -(p + 1.0));
        } else {
            total += gap / xs[n - 1];
        }
    }
    return total;
}

double ks_distance(const GridFunction& F, const GridFunction& G) {
    if (!F.same_grid(G)) throw std::invalid_argument("ks_distance: grids differ");
    return (F.values() - G.values()).abs().maxCoeff();
}

} // namespace psiproc
