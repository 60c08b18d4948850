#include "psiproc/grid_function.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace psiproc {

namespace {

void check_grid(const Eigen::ArrayXd& xs) {
    if (xs.size() < 3) throw std::invalid_argument("GridFunction: need at least 3 grid nodes");
    if (xs[0] != 0.0) throw std::invalid_argument("GridFunction: grid must start at exactly 0");
    for (Eigen::Index i = 0; i + 1 < xs.size(); ++i)
        if (!(xs[i + 1] > xs[i])) throw std::invalid_argument("GridFunction: grid not increasing");
}

} // namespace

Eigen::ArrayXd GridFunction::geometric_grid(double x_min, double x_max, int points) {
    if (!(x_min > 0.0) || !(x_max > x_min) || points < 2)
        throw std::invalid_argument("geometric_grid: need 0 < x_min < x_max, points >= 2");
    Eigen::ArrayXd xs(points + 1);
    xs[0] = 0.0;
    double lmin = std::log(x_min), lmax = std::log(x_max);
    for (int i = 0; i < points; ++i)
        xs[i + 1] = std::exp(lmin + (lmax - lmin) * i / (points - 1));
    xs[1] = x_min;
    xs[points] = x_max;
    return xs;
}

GridFunction GridFunction::distribution(Eigen::ArrayXd xs, Eigen::ArrayXd values,
                                        double tail_value, TailModel tail) {
    check_grid(xs);
    if (values.size() != xs.size())
        throw std::invalid_argument("GridFunction: values/grid size mismatch");
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (!(values[i] >= 0.0 && values[i] <= 1.0))
            throw std::invalid_argument("GridFunction: values outside [0,1]");
        if (i > 0 && values[i] < values[i - 1])
            throw std::invalid_argument("GridFunction: values not nondecreasing");
    }
    if (tail_value < values[values.size() - 1])
        throw std::invalid_argument("GridFunction: tail_value below last value");
    GridFunction g;
    g.xs_ = std::move(xs);
    g.v_ = std::move(values);
    g.q_ = g.v_[1] / (g.xs_[1] * g.xs_[1]);
    g.tail_ = tail_value;
    g.tailm_ = tail;
    return g;
}

GridFunction GridFunction::raw(Eigen::ArrayXd xs, Eigen::ArrayXd values, double q,
                               double tail_value, TailModel tail) {
    check_grid(xs);
    if (values.size() != xs.size())
        throw std::invalid_argument("GridFunction: values/grid size mismatch");
    GridFunction g;
    g.xs_ = std::move(xs);
    g.v_ = std::move(values);
    g.q_ = q;
    g.tail_ = tail_value;
    g.tailm_ = tail;
    return g;
}

double GridFunction::eval(double x) const {
    if (x < 0.0) throw std::domain_error("GridFunction::eval: negative argument");
    const Eigen::Index n = xs_.size();
    if (x < xs_[1]) return q_ * x * x;
    if (x >= xs_[n - 1]) {
        if (tailm_.kind == TailModel::Kind::Power) {
            double v = tail_ - tailm_.level * std::pow(x, -tailm_.exponent);
            return std::clamp(v, v_[n - 1], tail_);
        }
        return v_[n - 1];
    }
    const double* beg = xs_.data();
    auto it = std::upper_bound(beg, beg + n, x);
    Eigen::Index i = it - beg;  // xs_[i-1] <= x < xs_[i]
    double t = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
    return v_[i - 1] + t * (v_[i] - v_[i - 1]);
}

MonotoneCubic::MonotoneCubic(const double* xs, const double* ys, Eigen::Index n)
    : xs_(xs), ys_(ys), n_(n), m_(static_cast<std::size_t>(n)) {
    if (n < 3) throw std::invalid_argument("MonotoneCubic: need >= 3 nodes");
    std::vector<double> h(n - 1), d(n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        h[i] = xs[i + 1] - xs[i];
        d[i] = (ys[i + 1] - ys[i]) / h[i];
    }
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) {
            m_[i] = 0.0;
        } else {
            double w1 = 2.0 * h[i] + h[i - 1];
            double w2 = h[i] + 2.0 * h[i - 1];
            m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (m * d0 <= 0.0) return 0.0;
        if (d0 * d1 <= 0.0 && std::abs(m) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return m;
    };
    m_[0] = end_slope(h[0], h[1], d[0], d[1]);
    m_[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
}

double MonotoneCubic::operator()(double x) const {
    if (x <= xs_[0]) return ys_[0];
    if (x >= xs_[n_ - 1]) return ys_[n_ - 1];
    auto it = std::upper_bound(xs_, xs_ + n_, x);
    Eigen::Index i = it - xs_ - 1;
    double h = xs_[i + 1] - xs_[i];
    double t = (x - xs_[i]) / h;
    double t2 = t * t, t3 = t2 * t;
    double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * ys_[i] + h10 * h * m_[i] + h01 * ys_[i + 1] + h11 * h * m_[i + 1];
}

GridFunction GridFunction::resample_scaled(double scale) const {
    if (!(scale > 0.0)) throw std::invalid_argument("resample_scaled: scale must be positive");
    const Eigen::Index n = xs_.size();
    MonotoneCubic interp(xs_.data() + 1, v_.data() + 1, n - 1);
    Eigen::ArrayXd out(n);
    out[0] = 0.0;
    for (Eigen::Index i = 1; i < n; ++i) {
        double xq = xs_[i] * scale;
        double y;
        if (xq < xs_[1]) {
            y = q_ * xq * xq;
        } else if (xq > xs_[n - 1]) {
            if (tailm_.kind == TailModel::Kind::Power && v_[n - 1] < tail_)
                y = std::clamp(tail_ - tailm_.level * std::pow(xq, -tailm_.exponent), v_[n - 1],
                               tail_);
            else
                y = v_[n - 1];
        } else {
            y = interp(xq);
        }
        out[i] = std::clamp(y, 0.0, 1.0);
    }
    for (Eigen::Index i = 1; i < n; ++i) out[i] = std::max(out[i], out[i - 1]);
    GridFunction g;
    g.xs_ = xs_;
    g.v_ = std::move(out);
    g.q_ = q_ * scale * scale;
    g.tail_ = tail_;
    g.tailm_ = tailm_;
    return g;
}

double GridFunction::remonotonize() {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < v_.size(); ++i) {
        v_[i] = std::clamp(v_[i], 0.0, 1.0);
        if (i > 0 && v_[i] < v_[i - 1]) {
            worst = std::max(worst, v_[i - 1] - v_[i]);
            v_[i] = v_[i - 1];
        }
    }
    return worst;
}

bool GridFunction::same_grid(const GridFunction& other) const {
    return xs_.size() == other.xs_.size() && (xs_ == other.xs_).all();
}

GridFunction GridFunction::size_biased_exponential(const Eigen::ArrayXd& xs) {
    Eigen::ArrayXd v(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i) v[i] = 1.0 - (1.0 + xs[i]) * std::exp(-xs[i]);
    auto g = distribution(xs, std::move(v), 1.0);
    g.set_q(0.5);  // exact curvature at 0
    return g;
}

GridFunction GridFunction::kakutani_limit(const Eigen::ArrayXd& xs) {
    Eigen::ArrayXd v(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i) v[i] = std::min(xs[i] * xs[i] / 4.0, 1.0);
    auto g = distribution(xs, std::move(v), 1.0);
    g.set_q(0.25);
    return g;
}

const GridFunction& Trajectory::at_time(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::abs(times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return frames[i];
    throw std::out_of_range("Trajectory: no frame at requested time");
}

} // namespace psiproc
