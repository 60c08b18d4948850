#include "psiproc/choice_rule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace psiproc {

namespace {

void require_unit(double u) {
    if (!(u >= 0.0 && u <= 1.0))
        throw std::domain_error("ChoiceRule: argument outside [0,1]");
}

} // namespace

ChoiceRule ChoiceRule::max_k(int k) {
    if (k < 1) throw std::invalid_argument("max_k: k must be >= 1");
    return ChoiceRule(Kind::MaxK, k, "max:" + std::to_string(k));
}

ChoiceRule ChoiceRule::min_k(int k) {
    if (k < 1) throw std::invalid_argument("min_k: k must be >= 1");
    return ChoiceRule(Kind::MinK, k, "min:" + std::to_string(k));
}

ChoiceRule ChoiceRule::uniform() { return ChoiceRule(Kind::Uniform, 1, "uniform"); }

ChoiceRule ChoiceRule::kakutani() { return ChoiceRule(Kind::Kakutani, 0, "kakutani"); }

ChoiceRule ChoiceRule::tabulated(std::vector<std::pair<double, double>> knots) {
    if (knots.empty()) throw std::invalid_argument("tabulated: no knots");
    if (knots.front().first > 0.0) knots.insert(knots.begin(), {0.0, 0.0});
    for (std::size_t i = 0; i < knots.size(); ++i) {
        auto [u, v] = knots[i];
        if (!(u >= 0.0 && u <= 1.0) || !(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("tabulated: knot outside the unit square");
        if (i > 0 && !(u > knots[i - 1].first))
            throw std::invalid_argument("tabulated: knot u values must be strictly increasing");
        if (i > 0 && v < knots[i - 1].second)
            throw std::invalid_argument("tabulated: knot Psi values must be nondecreasing");
    }
    if (knots.back().first != 1.0 || knots.back().second != 1.0)
        throw std::invalid_argument("tabulated: last knot must be (1,1)");
    ChoiceRule r(Kind::Tabulated, 0, "table");
    r.us_.reserve(knots.size());
    r.vs_.reserve(knots.size());
    for (auto [u, v] : knots) {
        r.us_.push_back(u);
        r.vs_.push_back(v);
    }
    return r;
}

ChoiceRule ChoiceRule::density_rule(Eigen::ArrayXd us, Eigen::ArrayXd psi) {
    if (us.size() < 2 || us.size() != psi.size())
        throw std::invalid_argument("density_rule: need matching grids with >= 2 points");
    if (us[0] != 0.0 || us[us.size() - 1] != 1.0)
        throw std::invalid_argument("density_rule: grid must span [0,1]");
    for (Eigen::Index i = 0; i + 1 < us.size(); ++i)
        if (!(us[i + 1] > us[i])) throw std::invalid_argument("density_rule: grid not increasing");
    if ((psi < 0.0).any()) throw std::invalid_argument("density_rule: negative density");

    ChoiceRule r(Kind::Density, 0, "density");
    // exact cumulative of the piecewise-linear density, then renormalize to 1
    Eigen::ArrayXd cum(us.size());
    cum[0] = 0.0;
    for (Eigen::Index i = 1; i < us.size(); ++i)
        cum[i] = cum[i - 1] + 0.5 * (psi[i] + psi[i - 1]) * (us[i] - us[i - 1]);
    double total = cum[cum.size() - 1];
    if (!(total > 0.0)) throw std::invalid_argument("density_rule: zero total mass");
    r.dus_ = std::move(us);
    r.dpsi_ = psi / total;
    r.dcum_ = cum / total;
    return r;
}

ChoiceRule ChoiceRule::parse(const std::string& spec) {
    if (spec == "uniform") return uniform();
    if (spec == "kakutani") return kakutani();
    auto colon = spec.find(':');
    if (colon != std::string::npos) {
        std::string head = spec.substr(0, colon), arg = spec.substr(colon + 1);
        if (head == "max" || head == "min") {
            int k = 0;
            try {
                std::size_t pos = 0;
                k = std::stoi(arg, &pos);
                if (pos != arg.size()) throw std::invalid_argument("");
            } catch (...) {
                throw std::invalid_argument("rule '" + spec + "': K must be an integer");
            }
            return head == "max" ? max_k(k) : min_k(k);
        }
        if (head == "table") {
            std::ifstream in(arg);
            if (!in) throw std::invalid_argument("rule table file not readable: " + arg);
            std::vector<std::pair<double, double>> knots;
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                std::replace(line.begin(), line.end(), ',', ' ');
                std::istringstream ls(line);
                double u, v;
                if (!(ls >> u >> v)) throw std::invalid_argument("rule table: bad line '" + line + "'");
                knots.emplace_back(u, v);
            }
            auto rule = tabulated(std::move(knots));
            rule.label_ = "table:" + arg;
            return rule;
        }
    }
    throw std::invalid_argument("unknown rule syntax: '" + spec +
                                "' (expected max:K, min:K, uniform, kakutani, table:PATH)");
}

double ChoiceRule::cdf(double u) const {
    require_unit(u);
    switch (kind_) {
        case Kind::MaxK: return std::pow(u, k_);
        case Kind::MinK: return 1.0 - std::pow(1.0 - u, k_);
        case Kind::Uniform: return u;
        case Kind::Kakutani: return u >= 1.0 ? 1.0 : 0.0;
        case Kind::Tabulated: {
            auto it = std::upper_bound(us_.begin(), us_.end(), u);
            if (it == us_.begin()) return vs_.front();
            if (it == us_.end()) return vs_.back();
            std::size_t i = static_cast<std::size_t>(it - us_.begin());
            double t = (u - us_[i - 1]) / (us_[i] - us_[i - 1]);
            return vs_[i - 1] + t * (vs_[i] - vs_[i - 1]);
        }
        case Kind::Density: {
            const double* beg = dus_.data();
            const double* end = beg + dus_.size();
            auto it = std::upper_bound(beg, end, u);
            if (it == beg) return 0.0;
            if (it == end) return 1.0;
            Eigen::Index i = it - beg;
            double a = dus_[i - 1], d = u - a;
            double slope = (dpsi_[i] - dpsi_[i - 1]) / (dus_[i] - dus_[i - 1]);
            return dcum_[i - 1] + dpsi_[i - 1] * d + 0.5 * slope * d * d;
        }
    }
    return 0.0;
}

double ChoiceRule::quantile(double w) const {
    if (!(w >= 0.0 && w <= 1.0)) throw std::domain_error("quantile: w outside [0,1]");
    switch (kind_) {
        case Kind::MaxK: return std::pow(w, 1.0 / k_);
        case Kind::MinK: return 1.0 - std::pow(1.0 - w, 1.0 / k_);
        case Kind::Uniform: return w;
        case Kind::Kakutani: return 1.0;  // inf{u : 1[u>=1] >= w} for w > 0; convention also at w=0
        case Kind::Tabulated: {
            // first knot with value >= w, then invert the linear piece
            auto it = std::lower_bound(vs_.begin(), vs_.end(), w);
            if (it == vs_.begin()) return us_.front();
            std::size_t i = static_cast<std::size_t>(it - vs_.begin());
            if (i == vs_.size()) return 1.0;
            double v0 = vs_[i - 1], v1 = vs_[i];
            if (v1 == v0) return us_[i - 1];
            return us_[i - 1] + (w - v0) / (v1 - v0) * (us_[i] - us_[i - 1]);
        }
        case Kind::Density: {
            const double* beg = dcum_.data();
            const double* end = beg + dcum_.size();
            auto it = std::lower_bound(beg, end, w);
            if (it == beg) return 0.0;
            Eigen::Index i = it - beg;
            if (i == dcum_.size()) return 1.0;
            double a = dus_[i - 1], h = dus_[i] - a;
            double p0 = dpsi_[i - 1];
            double slope = (dpsi_[i] - p0) / h;
            double rem = w - dcum_[i - 1];
            // solve p0*d + slope*d^2/2 = rem on [0,h]
            if (std::abs(slope) < 1e-300) {
                return p0 > 0.0 ? a + rem / p0 : dus_[i];
            }
            double disc = p0 * p0 + 2.0 * slope * rem;
            double d = (-p0 + std::sqrt(std::max(0.0, disc))) / slope;
            return a + std::clamp(d, 0.0, h);
        }
    }
    return 0.0;
}

std::optional<double> ChoiceRule::density(double u) const {
    require_unit(u);
    switch (kind_) {
        case Kind::MaxK: return k_ * std::pow(u, k_ - 1);
        case Kind::MinK: return k_ * std::pow(1.0 - u, k_ - 1);
        case Kind::Uniform: return 1.0;
        case Kind::Kakutani: return std::nullopt;
        case Kind::Tabulated: return std::nullopt;
        case Kind::Density: {
            const double* beg = dus_.data();
            auto it = std::upper_bound(beg, beg + dus_.size(), u);
            if (it == beg) return dpsi_[0];
            Eigen::Index i = it - beg;
            if (i == dus_.size()) return dpsi_[i - 1];
            double t = (u - dus_[i - 1]) / (dus_[i] - dus_[i - 1]);
            return dpsi_[i - 1] + t * (dpsi_[i] - dpsi_[i - 1]);
        }
    }
    return std::nullopt;
}

AssumptionReport ChoiceRule::check_assumptions() const {
    AssumptionReport rep;
    switch (kind_) {
        case Kind::MaxK:
        case Kind::Uniform:
            rep.continuous = true;
            rep.kappa = 1.0;
            rep.c = 1.0;
            return rep;
        case Kind::MinK:
            rep.continuous = true;
            rep.kappa = static_cast<double>(k_);
            rep.c = 1.0;
            return rep;
        case Kind::Kakutani:
            rep.continuous = false;
            return rep;
        case Kind::Tabulated:
        case Kind::Density: {
            rep.continuous = true;
            // fit on u_j = 1 - 2^-j, j = 1..40; (D) only matters near u = 1
            double kappa = 1.0;
            for (int j = 1; j <= 40; ++j) {
                double one_minus_u = std::ldexp(1.0, -j);
                double tail = 1.0 - cdf(1.0 - one_minus_u);
                if (tail <= 0.0) {
                    rep.violated = true;
                    return rep;
                }
                kappa = std::max(kappa, std::log(tail) / std::log(one_minus_u));
            }
            double c = std::numeric_limits<double>::infinity();
            for (int j = 1; j <= 40; ++j) {
                double one_minus_u = std::ldexp(1.0, -j);
                double tail = 1.0 - cdf(1.0 - one_minus_u);
                c = std::min(c, tail / std::pow(one_minus_u, kappa));
            }
            rep.kappa = kappa;
            rep.c = c;
            return rep;
        }
    }
    return rep;
}

double ChoiceRule::density_sup() const {
    switch (kind_) {
        case Kind::MaxK:
        case Kind::MinK: return static_cast<double>(k_);
        case Kind::Uniform: return 1.0;
        case Kind::Density: return dpsi_.maxCoeff();
        case Kind::Kakutani:
        case Kind::Tabulated: {
            // steepest knot slope (Tabulated); Kakutani has no density
            if (kind_ == Kind::Kakutani) return std::numeric_limits<double>::infinity();
            double s = 0.0;
            for (std::size_t i = 1; i < us_.size(); ++i)
                s = std::max(s, (vs_[i] - vs_[i - 1]) / (us_[i] - us_[i - 1]));
            return s;
        }
    }
    return 1.0;
}

std::optional<double> ChoiceRule::limit_tail_exponent() const {
    if (kind_ == Kind::MinK && k_ > 1) return 1.0 / (k_ - 1);
    return std::nullopt;
}

} // namespace psiproc
