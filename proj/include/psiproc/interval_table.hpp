#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "psiproc/choice_rule.hpp"
#include "psiproc/rng.hpp"

namespace psiproc {

struct SplitEvent {
    std::uint64_t step = 0;
    double chosen_length = 0.0;
    double fraction = 0.0;             // v, uniform on (0,1)
    double entropy_increment = 0.0;    // chosen_length * W(v), W(v) = v log v + (1-v) log(1-v)
    double child_a = 0.0;              // v*l as stored
    double child_b = 0.0;              // l - v*l as stored
    std::uint64_t chosen_id = 0;
};

struct TableOptions {
    bool track_positions = false;
    bool clock = false;                // exponential-intensity embedding, N_t a rate-e^t process
};

// The live interval configuration: a weight-balanced search tree keyed by
// (length, insertion_id), each node augmented with subtree length-sum and
// count. Size-biased CDF/quantile and splits run in O(log n).
// Single-writer; concurrent reads only between writes.
class IntervalTable {
public:
    static IntervalTable from_config(std::span<const double> lengths, TableOptions opts = {});
    // spacings of m uniform points on the circle
    static IntervalTable random_config(std::size_t m, Rng& rng, TableOptions opts = {});

    // F-tilde(x) = sum of lengths <= x, normalized by the total
    double size_biased_cdf(double x) const;

    struct Quantile {
        double length;
        std::uint64_t id;
    };
    // inf{x : F-tilde(x) >= u}; among equal lengths the smallest insertion_id
    Quantile size_biased_quantile(double u) const;

    SplitEvent split_step(const ChoiceRule& rule, Rng& rng);

    double largest() const;
    std::uint64_t count() const { return node_count_; }
    std::uint64_t step_index() const { return step_; }
    std::uint64_t initial_count() const { return n0_; }
    double total_length() const { return total_; }

    struct Entropy {
        double raw;       // sum I log I
        double rescaled;  // raw + log(count)
    };
    Entropy entropy() const;

    // closed-form int_0^inf x^-2 F-tilde(x) dx evaluated from the tree;
    // equals count exactly in exact arithmetic
    double mass_identity_integral() const;

    bool positions_enabled() const { return opts_.track_positions; }
    bool clock_enabled() const { return opts_.clock; }
    double clock_time() const;  // t with e^t = n0 + sum of Exp(1) arrivals
    const std::vector<double>& split_points() const;

    // in-order visit of (length, id, start); lengths ascend
    void for_each(const std::function<void(double, std::uint64_t, double)>& fn) const;
    std::vector<double> sorted_lengths() const;

    // full recomputation of cached aggregates and balance invariants
    bool audit() const;

private:
    static constexpr std::uint32_t kNil = 0;

    struct Node {
        double len = 0.0;
        double start = 0.0;
        double sum = 0.0;      // subtree length sum, pull-up order (left+right)+len
        std::uint64_t id = 0;
        std::uint64_t cnt = 0; // subtree node count
        std::uint32_t left = kNil;
        std::uint32_t right = kNil;
    };

    IntervalTable() { nodes_.push_back(Node{}); }  // index 0 is the nil sentinel

    std::uint64_t weight(std::uint32_t t) const { return nodes_[t].cnt + 1; }
    void pull_up(std::uint32_t t);
    std::uint32_t rotate_left(std::uint32_t t);
    std::uint32_t rotate_right(std::uint32_t t);
    std::uint32_t rebalance(std::uint32_t t);
    std::uint32_t insert_rec(std::uint32_t t, std::uint32_t node);
    std::uint32_t erase_rec(std::uint32_t t, double len, std::uint64_t id, std::uint32_t& removed);
    std::uint32_t detach_min(std::uint32_t t, std::uint32_t& taken);
    bool less_key(double la, std::uint64_t ia, double lb, std::uint64_t ib) const {
        return la < lb || (la == lb && ia < ib);
    }

    std::uint32_t alloc_node(double len, std::uint64_t id, double start);
    void insert_interval(double len, std::uint64_t id, double start);
    void erase_interval(double len, std::uint64_t id);

    void add_total(double delta);
    void add_entropy(double delta);

    std::vector<Node> nodes_;
    std::vector<std::uint32_t> free_;
    std::uint32_t root_ = kNil;

    std::uint64_t node_count_ = 0;
    std::uint64_t n0_ = 0;
    std::uint64_t step_ = 0;
    std::uint64_t next_id_ = 0;

    double total_ = 0.0, total_comp_ = 0.0;        // Neumaier-compensated running sum
    double entropy_raw_ = 0.0, entropy_comp_ = 0.0;

    TableOptions opts_;
    double clock_mass_ = 0.0;     // e^t
    std::vector<double> split_points_;
};

} // namespace psiproc
