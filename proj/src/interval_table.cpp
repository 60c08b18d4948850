#include "psiproc/interval_table.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace psiproc {

namespace {

constexpr double kUnderflowFloor = 1e-300;

// weight-balance parameters (Delta, Gamma) = (3, 2), weights = count + 1
constexpr std::uint64_t kDelta = 3;
constexpr std::uint64_t kGamma = 2;

void neumaier_add(double& sum, double& comp, double v) {
    double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
        comp += (sum - t) + v;
    else
        comp += (v - t) + sum;
    sum = t;
}

} // namespace

void IntervalTable::pull_up(std::uint32_t t) {
    Node& n = nodes_[t];
    n.cnt = nodes_[n.left].cnt + nodes_[n.right].cnt + 1;
    n.sum = (nodes_[n.left].sum + nodes_[n.right].sum) + n.len;
}

std::uint32_t IntervalTable::rotate_left(std::uint32_t t) {
    std::uint32_t r = nodes_[t].right;
    nodes_[t].right = nodes_[r].left;
    pull_up(t);
    nodes_[r].left = t;
    pull_up(r);
    return r;
}

std::uint32_t IntervalTable::rotate_right(std::uint32_t t) {
    std::uint32_t l = nodes_[t].left;
    nodes_[t].left = nodes_[l].right;
    pull_up(t);
    nodes_[l].right = t;
    pull_up(l);
    return l;
}

std::uint32_t IntervalTable::rebalance(std::uint32_t t) {
    std::uint64_t wl = weight(nodes_[t].left), wr = weight(nodes_[t].right);
    if (wr > kDelta * wl) {
        std::uint32_t r = nodes_[t].right;
        if (weight(nodes_[r].left) >= kGamma * weight(nodes_[r].right))
            nodes_[t].right = rotate_right(r);
        return rotate_left(t);
    }
    if (wl > kDelta * wr) {
        std::uint32_t l = nodes_[t].left;
        if (weight(nodes_[l].right) >= kGamma * weight(nodes_[l].left))
            nodes_[t].left = rotate_left(l);
        return rotate_right(t);
    }
    pull_up(t);
    return t;
}

std::uint32_t IntervalTable::alloc_node(double len, std::uint64_t id, double start) {
    std::uint32_t idx;
    if (!free_.empty()) {
        idx = free_.back();
        free_.pop_back();
    } else {
        idx = static_cast<std::uint32_t>(nodes_.size());
        nodes_.push_back(Node{});
    }
    Node& n = nodes_[idx];
    n = Node{};
    n.len = len;
    n.id = id;
    n.start = start;
    n.cnt = 1;
    n.sum = len;
    return idx;
}

std::uint32_t IntervalTable::insert_rec(std::uint32_t t, std::uint32_t node) {
    if (t == kNil) return node;
    if (less_key(nodes_[node].len, nodes_[node].id, nodes_[t].len, nodes_[t].id))
        nodes_[t].left = insert_rec(nodes_[t].left, node);
    else
        nodes_[t].right = insert_rec(nodes_[t].right, node);
    return rebalance(t);
}

std::uint32_t IntervalTable::detach_min(std::uint32_t t, std::uint32_t& taken) {
    if (nodes_[t].left == kNil) {
        taken = t;
        return nodes_[t].right;
    }
    nodes_[t].left = detach_min(nodes_[t].left, taken);
    return rebalance(t);
}

std::uint32_t IntervalTable::erase_rec(std::uint32_t t, double len, std::uint64_t id,
                                       std::uint32_t& removed) {
    if (t == kNil) return kNil;
    Node& n = nodes_[t];
    if (len == n.len && id == n.id) {
        removed = t;
        if (n.left == kNil) return n.right;
        if (n.right == kNil) return n.left;
        std::uint32_t succ = kNil;
        std::uint32_t right = detach_min(n.right, succ);
        nodes_[succ].left = n.left;
        nodes_[succ].right = right;
        return rebalance(succ);
    }
    if (less_key(len, id, n.len, n.id))
        n.left = erase_rec(n.left, len, id, removed);
    else
        n.right = erase_rec(n.right, len, id, removed);
    return rebalance(t);
}

void IntervalTable::insert_interval(double len, std::uint64_t id, double start) {
    root_ = insert_rec(root_, alloc_node(len, id, start));
    ++node_count_;
}

void IntervalTable::erase_interval(double len, std::uint64_t id) {
    std::uint32_t removed = kNil;
    root_ = erase_rec(root_, len, id, removed);
    if (removed == kNil) throw std::logic_error("erase_interval: key not found");
    free_.push_back(removed);
    --node_count_;
}

void IntervalTable::add_total(double delta) { neumaier_add(total_, total_comp_, delta); }
void IntervalTable::add_entropy(double delta) { neumaier_add(entropy_raw_, entropy_comp_, delta); }

IntervalTable IntervalTable::from_config(std::span<const double> lengths, TableOptions opts) {
    if (lengths.empty()) throw std::invalid_argument("from_config: empty configuration");
    double sum = 0.0, comp = 0.0;
    for (double l : lengths) {
        if (!(l > 0.0) || !std::isfinite(l))
            throw std::invalid_argument("from_config: lengths must be positive and finite");
        neumaier_add(sum, comp, l);
    }
    sum += comp;
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("from_config: lengths must sum to 1 within 1e-9");

    IntervalTable t;
    t.opts_ = opts;
    t.n0_ = lengths.size();
    double start = 0.0;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        double len = lengths[i] / sum;
        t.insert_interval(len, t.next_id_++, start);
        t.add_total(len);
        t.add_entropy(len * std::log(len));
        start += len;
    }
    t.clock_mass_ = static_cast<double>(t.n0_);
    return t;
}

IntervalTable IntervalTable::random_config(std::size_t m, Rng& rng, TableOptions opts) {
    if (m == 0) throw std::invalid_argument("random_config: need at least one interval");
    if (m == 1) {
        double one = 1.0;
        return from_config(std::span<const double>(&one, 1), opts);
    }
    std::vector<double> pts(m);
    for (auto& p : pts) p = rng.uniform_open();
    std::sort(pts.begin(), pts.end());
    std::vector<double> lens(m);
    for (std::size_t i = 0; i + 1 < m; ++i) lens[i] = pts[i + 1] - pts[i];
    lens[m - 1] = 1.0 - pts[m - 1] + pts[0];  // wrap-around spacing
    return from_config(lens, opts);
}

double IntervalTable::size_biased_cdf(double x) const {
    double acc = 0.0;
    std::uint32_t t = root_;
    while (t != kNil) {
        const Node& n = nodes_[t];
        if (n.len <= x) {
            acc += nodes_[n.left].sum + n.len;
            t = n.right;
        } else {
            t = n.left;
        }
    }
    double total = nodes_[root_].sum;
    return total > 0.0 ? std::min(acc / total, 1.0) : 0.0;
}

IntervalTable::Quantile IntervalTable::size_biased_quantile(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("size_biased_quantile: u outside [0,1]");
    if (root_ == kNil) throw std::logic_error("size_biased_quantile: empty table");
    double target = u * nodes_[root_].sum;
    std::uint32_t t = root_;
    double len = 0.0;
    double acc = 0.0;
    while (t != kNil) {
        const Node& n = nodes_[t];
        double through_left = acc + nodes_[n.left].sum;
        if (target <= through_left && n.left != kNil) {
            t = n.left;
        } else if (target <= through_left + n.len || n.right == kNil) {
            len = n.len;
            break;
        } else {
            acc = through_left + n.len;
            t = n.right;
        }
    }
    // deterministic tie-break: smallest insertion_id among this length
    std::uint32_t best = kNil;
    t = root_;
    while (t != kNil) {
        const Node& n = nodes_[t];
        if (n.len < len) {
            t = n.right;
        } else {
            if (n.len == len) best = t;
            t = n.left;
        }
    }
    const Node& b = nodes_[best];
    return {b.len, b.id};
}

SplitEvent IntervalTable::split_step(const ChoiceRule& rule, Rng& rng) {
    if (node_count_ == 0) throw std::logic_error("split_step: empty table");
    double u = rule.sample(rng);
    Quantile q = size_biased_quantile(u);
    double v = rng.uniform_open();

    double l = q.length;
    double a = v * l;
    double b = l - a;
    if (a < kUnderflowFloor || b < kUnderflowFloor)
        throw std::runtime_error("split_step: child length underflow below 1e-300 at step " +
                                 std::to_string(step_));

    // locate start before removal
    double start = 0.0;
    if (opts_.track_positions) {
        std::uint32_t t = root_;
        while (t != kNil) {
            const Node& n = nodes_[t];
            if (q.length == n.len && q.id == n.id) {
                start = n.start;
                break;
            }
            t = less_key(q.length, q.id, n.len, n.id) ? n.left : n.right;
        }
    }

    erase_interval(q.length, q.id);
    std::uint64_t ida = next_id_++, idb = next_id_++;
    insert_interval(a, ida, start);
    insert_interval(b, idb, start + a);

    add_total(a);
    add_total(b);
    add_total(-l);
    add_entropy(a * std::log(a));
    add_entropy(b * std::log(b));
    add_entropy(-(l * std::log(l)));

    if (opts_.track_positions) split_points_.push_back(start + a);
    if (opts_.clock) clock_mass_ += rng.exponential();

    ++step_;
    SplitEvent ev;
    ev.step = step_;
    ev.chosen_length = l;
    ev.fraction = v;
    ev.entropy_increment = l * (v * std::log(v) + (1.0 - v) * std::log1p(-v));
    ev.child_a = a;
    ev.child_b = b;
    ev.chosen_id = q.id;
    return ev;
}

double IntervalTable::largest() const {
    std::uint32_t t = root_;
    if (t == kNil) return 0.0;
    while (nodes_[t].right != kNil) t = nodes_[t].right;
    return nodes_[t].len;
}

IntervalTable::Entropy IntervalTable::entropy() const {
    if (node_count_ == 0) throw std::logic_error("entropy: empty table");
    double raw = entropy_raw_ + entropy_comp_;
    return {raw, raw + std::log(static_cast<double>(node_count_))};
}

void IntervalTable::for_each(const std::function<void(double, std::uint64_t, double)>& fn) const {
    std::vector<std::uint32_t> stack;
    std::uint32_t t = root_;
    while (t != kNil || !stack.empty()) {
        while (t != kNil) {
            stack.push_back(t);
            t = nodes_[t].left;
        }
        t = stack.back();
        stack.pop_back();
        fn(nodes_[t].len, nodes_[t].id, nodes_[t].start);
        t = nodes_[t].right;
    }
}

std::vector<double> IntervalTable::sorted_lengths() const {
    std::vector<double> out;
    out.reserve(node_count_);
    for_each([&](double len, std::uint64_t, double) { out.push_back(len); });
    return out;
}

double IntervalTable::mass_identity_integral() const {
    // step function F-tilde jumps at each distinct length; integrate x^-2 F-tilde
    // segment by segment in closed form
    double integral = 0.0, icomp = 0.0;
    double cum = 0.0, ccomp = 0.0;
    double prev = -1.0;
    for_each([&](double len, std::uint64_t, double) {
        if (prev > 0.0 && len > prev)
            neumaier_add(integral, icomp, (cum + ccomp) * (1.0 / prev - 1.0 / len));
        neumaier_add(cum, ccomp, len);
        prev = len;
    });
    if (prev > 0.0) neumaier_add(integral, icomp, (cum + ccomp) / prev);
    return integral + icomp;
}

double IntervalTable::clock_time() const {
    if (!opts_.clock) throw std::logic_error("clock_time: clock not enabled");
    return std::log(clock_mass_);
}

const std::vector<double>& IntervalTable::split_points() const {
    if (!opts_.track_positions) throw std::logic_error("positions tracking not enabled");
    return split_points_;
}

bool IntervalTable::audit() const {
    bool ok = true;
    // full leaf-level recomputation with the same pull-up association
    std::function<std::pair<std::uint64_t, double>(std::uint32_t)> walk =
        [&](std::uint32_t t) -> std::pair<std::uint64_t, double> {
        if (t == kNil) return {0, 0.0};
        auto [lc, ls] = walk(nodes_[t].left);
        auto [rc, rs] = walk(nodes_[t].right);
        std::uint64_t cnt = lc + rc + 1;
        double sum = (ls + rs) + nodes_[t].len;
        if (cnt != nodes_[t].cnt || sum != nodes_[t].sum) ok = false;
        std::uint64_t wl = lc + 1, wr = rc + 1;
        if (wl > kDelta * wr || wr > kDelta * wl) ok = false;
        return {cnt, sum};
    };
    auto [cnt, sum] = walk(root_);
    (void)sum;
    if (cnt != node_count_) ok = false;
    // in-order keys strictly increasing
    double plen = -1.0;
    std::uint64_t pid = 0;
    bool first = true;
    for_each([&](double len, std::uint64_t id, double) {
        if (!first && !less_key(plen, pid, len, id)) ok = false;
        plen = len;
        pid = id;
        first = false;
    });
    return ok;
}

} // namespace psiproc
