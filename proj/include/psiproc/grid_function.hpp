#pragma once

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace psiproc {

// Closure for x beyond the last grid node.
// power: 1 - F(x) ~ level * x^-exponent. exponential: 1 - F(x) ~ level * x * exp(-rate x)
// (kept for reporting; integrals treat it as negligible beyond the grid).
struct TailModel {
    enum class Kind { None, Power, Exponential };
    Kind kind = Kind::None;
    double level = 0.0;
    double exponent = 0.0;  // power exponent p, or exponential rate

    static TailModel none() { return {}; }
    static TailModel power(double level, double exponent) {
        return {Kind::Power, level, exponent};
    }
};

// A function on the grid {0} u geometric(x_min..x_max): piecewise linear between
// nodes, quadratic q*x^2 on [0, xs[1]], tail_value at +infinity with an optional
// tail model. Distribution members of the space D carry values in [0,1],
// nondecreasing; raw payloads (integrands, derivatives) skip those checks.
class GridFunction {
public:
    GridFunction() = default;

    // checked constructor for subdistribution functions
    static GridFunction distribution(Eigen::ArrayXd xs, Eigen::ArrayXd values,
                                     double tail_value = 1.0, TailModel tail = {});
    // unchecked payload (integrands etc.); q defaults from the first interior value
    static GridFunction raw(Eigen::ArrayXd xs, Eigen::ArrayXd values, double q,
                            double tail_value = 0.0, TailModel tail = {});

    const Eigen::ArrayXd& xs() const { return xs_; }
    const Eigen::ArrayXd& values() const { return v_; }
    Eigen::ArrayXd& mutable_values() { return v_; }
    double q() const { return q_; }
    void set_q(double q) { q_ = q; }
    double tail_value() const { return tail_; }
    void set_tail_value(double t) { tail_ = t; }
    const TailModel& tail_model() const { return tailm_; }
    void set_tail_model(TailModel m) { tailm_ = m; }

    bool has_derivative() const { return deriv_.size() == v_.size(); }
    const Eigen::ArrayXd& derivative() const { return deriv_; }
    void set_derivative(Eigen::ArrayXd d) { deriv_ = std::move(d); }

    Eigen::Index size() const { return xs_.size(); }
    double x_min() const { return xs_[1]; }
    double x_max() const { return xs_[xs_.size() - 1]; }

    // piecewise-linear evaluation with the near-zero and tail closures
    double eval(double x) const;

    // G(x) = F(scale*x) on the same grid; monotone-cubic inside the grid,
    // model closures outside; for distribution functions only
    GridFunction resample_scaled(double scale) const;

    // nondecreasing + [0,1] repair; returns the largest downward violation seen
    double remonotonize();

    bool same_grid(const GridFunction& other) const;

    static Eigen::ArrayXd geometric_grid(double x_min, double x_max, int points);
    static GridFunction size_biased_exponential(const Eigen::ArrayXd& xs);
    static GridFunction kakutani_limit(const Eigen::ArrayXd& xs);

private:
    Eigen::ArrayXd xs_, v_, deriv_;
    double q_ = 0.0;
    double tail_ = 0.0;
    TailModel tailm_;
};

// Fritsch-Carlson monotone cubic interpolant over (xs, ys); node derivative
// estimates via weighted harmonic means, three-point one-sided at the ends.
class MonotoneCubic {
public:
    MonotoneCubic(const double* xs, const double* ys, Eigen::Index n);
    double operator()(double x) const;

private:
    const double* xs_;
    const double* ys_;
    Eigen::Index n_;
    std::vector<double> m_;
};

// Time-indexed frames of the deterministic evolution on a shared grid.
struct Trajectory {
    std::vector<double> times;
    std::vector<GridFunction> frames;        // F_t on the shared grid
    std::vector<GridFunction> tilde_frames;  // F-tilde_t, same grid (optional)
    double max_monotonicity_violation = 0.0;

    const GridFunction& at_time(double t) const;
};

} // namespace psiproc
