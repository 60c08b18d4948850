#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "psiproc/rng.hpp"

namespace psiproc {

struct AssumptionReport {
    bool continuous = false;              // assumption (C)
    std::optional<double> kappa;          // assumption (D): 1-Psi(u) >= c(1-u)^kappa
    std::optional<double> c;
    bool violated = false;                // 1-Psi(u)=0 for some u<1 on the probe grid
};

// A choice rule: the distribution function Psi of the quantile law on (0,1].
// Immutable after construction; safe to share across threads.
class ChoiceRule {
public:
    enum class Kind { MaxK, MinK, Uniform, Kakutani, Tabulated, Density };

    static ChoiceRule max_k(int k);
    static ChoiceRule min_k(int k);
    static ChoiceRule uniform();
    static ChoiceRule kakutani();
    // knots: strictly increasing in u, nondecreasing in Psi, last knot (1,1).
    // A leading (0,0) knot is implied when the first knot has u > 0.
    static ChoiceRule tabulated(std::vector<std::pair<double, double>> knots);
    // grid density psi on [0,1]; renormalized so the cdf reaches exactly 1.
    static ChoiceRule density_rule(Eigen::ArrayXd us, Eigen::ArrayXd psi);

    // CLI syntax: max:K | min:K | uniform | kakutani | table:PATH
    static ChoiceRule parse(const std::string& spec);

    double cdf(double u) const;                       // Psi(u); domain error outside [0,1]
    double quantile(double w) const;                  // inf{u : Psi(u) >= w}
    double sample(Rng& rng) const { return quantile(rng.uniform_open()); }
    std::optional<double> density(double u) const;    // psi(u) where absolutely continuous
    AssumptionReport check_assumptions() const;

    Kind kind() const { return kind_; }
    int k() const { return k_; }
    const std::string& label() const { return label_; }

    bool has_density() const { return kind_ != Kind::Kakutani && kind_ != Kind::Tabulated; }
    // sup of psi over [0,1]; used for evolution step-size control
    double density_sup() const;
    // exponent p such that 1-F^Psi decays like x^-p (heavy tails only, min-k)
    std::optional<double> limit_tail_exponent() const;

private:
    ChoiceRule(Kind kind, int k, std::string label) : kind_(kind), k_(k), label_(std::move(label)) {}

    Kind kind_;
    int k_ = 0;
    std::string label_;
    // Tabulated knots / density grid
    std::vector<double> us_, vs_;       // knot locations and Psi values (Tabulated)
    Eigen::ArrayXd dus_, dpsi_, dcum_;  // density grid, density values, cumulative (Density)
};

} // namespace psiproc
