#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "smcts/network.hpp"

namespace smcts {

/// UCB1 exploration term. PaperRatio is sqrt(N_p/N_s) exactly as used by the
/// search this library implements; LogRatio is the textbook
/// sqrt(ln(N_p)/N_s) offered as an alternative.
enum class UcbVariant { PaperRatio, LogRatio };

enum class TieBreak { LowestId, RandomSeeded };

struct SearchConfig {
    int M = 1;                       // stores to close; terminal depth
    double exploration_C = 1.0;      // scale against node values (reward units)
    std::uint64_t budget_iterations = 1000;
    std::optional<double> budget_seconds;
    std::uint64_t seed = 0;
    UcbVariant ucb_variant = UcbVariant::PaperRatio;
    TieBreak tie_break = TieBreak::RandomSeeded;
    bool reevaluation_enabled = true;

    void validate(std::size_t network_size) const {
        if (M < 1)
            throw std::invalid_argument("config: M must be >= 1");
        if (static_cast<std::size_t>(M) >= network_size)
            throw std::invalid_argument("config: M must be < N (" +
                                        std::to_string(network_size) + " stores)");
        if (budget_iterations < 1)
            throw std::invalid_argument("config: budget_iterations must be >= 1");
        if (budget_seconds && !(*budget_seconds > 0.0))
            throw std::invalid_argument("config: budget_seconds must be > 0");
        if (!(exploration_C >= 0.0))
            throw std::invalid_argument("config: exploration_C must be >= 0");
    }
};

/// Search-tree node, identified by the ordered list of stores removed along
/// the path from the root. Values are rewards (negated losses), so argmax
/// selection seeks the minimum-loss closure set.
///
/// Nodes carry duplicate "refined" statistics that take over in selection
/// once the node has been re-evaluated with the main function; ordinary
/// backups keep feeding both sets from then on.
struct SearchNode {
    std::vector<StoreId> removed_path;
    double value_sum = 0.0;
    int visits = 0;
    double refined_value_sum = 0.0;
    int refined_visits = 0;
    bool reevaluated = false;
    bool terminal = false;
    bool leaf = true; // not yet expanded
    std::vector<std::unique_ptr<SearchNode>> children;

    int depth() const { return static_cast<int>(removed_path.size()); }

    StoreId action() const {
        if (removed_path.empty())
            throw std::logic_error("root node has no incoming action");
        return removed_path.back();
    }

    double mean() const {
        if (visits < 1) throw std::logic_error("mean of unvisited node");
        return value_sum / visits;
    }

    double refined_mean() const {
        if (refined_visits < 1) throw std::logic_error("refined mean unset");
        return refined_value_sum / refined_visits;
    }

    // Statistics the tree policy reads: refined once re-evaluated.
    double selection_mean() const { return reevaluated ? refined_mean() : mean(); }
    int selection_visits() const { return reevaluated ? refined_visits : visits; }

    ClosureState closure_state() const { return ClosureState(removed_path); }
};

/// UCB1 score of one child. Visits are passed as reals; callers supply
/// integer counts, and the caller must route unvisited children to the
/// unvisited-first policy instead of calling this.
inline double ucb1_score(double node_value_mean, double node_visits,
                         double parent_visits, double exploration_c,
                         UcbVariant variant) {
    if (!(node_visits >= 1.0) || !(parent_visits >= 1.0))
        throw std::logic_error("ucb1_score requires visits >= 1");
    const double ratio = variant == UcbVariant::PaperRatio
                             ? parent_visits / node_visits
                             : std::log(parent_visits) / node_visits;
    return node_value_mean + exploration_c * std::sqrt(ratio);
}

/// Expands a node: one child per store not yet on the removal path, in
/// network store order. Children at depth M are marked terminal.
inline void expand(SearchNode& node, const StoreNetwork& network, int terminal_depth) {
    if (node.terminal)
        throw std::logic_error("expand: node is terminal");
    if (!node.leaf)
        throw std::logic_error("expand: node already expanded");
    node.children.reserve(network.size() - node.removed_path.size());
    for (const auto& s : network.stores()) {
        const bool removed = std::find(node.removed_path.begin(), node.removed_path.end(),
                                       s.store_id) != node.removed_path.end();
        if (removed) continue;
        auto child = std::make_unique<SearchNode>();
        child->removed_path = node.removed_path;
        child->removed_path.push_back(s.store_id);
        child->terminal = child->depth() == terminal_depth;
        node.children.push_back(std::move(child));
    }
    node.leaf = false;
}

inline SearchNode* find_child(SearchNode& node, StoreId action) {
    for (auto& c : node.children)
        if (c->action() == action) return c.get();
    return nullptr;
}

namespace detail {

/// All entries achieving the maximum score, in input order.
template <typename T, typename Score>
std::vector<const T*> argmax_set(const std::vector<const T*>& items, Score&& score) {
    std::vector<const T*> best;
    double best_score = 0.0;
    for (const T* item : items) {
        const double s = score(item);
        if (best.empty() || s > best_score) {
            best.assign(1, item);
            best_score = s;
        } else if (s == best_score) {
            best.push_back(item);
        }
    }
    return best;
}

template <typename T>
const T* pick_uniform(const std::vector<const T*>& items, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> dist(0, items.size() - 1);
    return items[dist(rng)];
}

} // namespace detail

/// Tree policy for one step: any unvisited child first, otherwise the UCB1
/// argmax over children. Ties follow the configured policy (lowest action id
/// or a seeded uniform pick).
inline StoreId select_child(const SearchNode& node, const SearchConfig& config,
                            std::mt19937_64& rng) {
    if (node.children.empty())
        throw std::logic_error("select_child: node has no children");

    std::vector<const SearchNode*> candidates;
    for (const auto& c : node.children)
        if (c->visits == 0) candidates.push_back(c.get());

    if (candidates.empty()) {
        std::vector<const SearchNode*> all;
        all.reserve(node.children.size());
        for (const auto& c : node.children) all.push_back(c.get());
        const double parent_visits = node.selection_visits();
        candidates = detail::argmax_set(all, [&](const SearchNode* c) {
            return ucb1_score(c->selection_mean(), c->selection_visits(), parent_visits,
                              config.exploration_C, config.ucb_variant);
        });
    }

    if (config.tie_break == TieBreak::RandomSeeded && candidates.size() > 1)
        return detail::pick_uniform(candidates, rng)->action();
    StoreId lowest = candidates.front()->action();
    for (const auto* c : candidates) lowest = std::min(lowest, c->action());
    return lowest;
}

/// Adds one evaluation to every node on a root-to-node path. Re-evaluated
/// nodes accumulate into both statistic sets.
inline void backup(std::span<SearchNode* const> node_path, double value) {
    if (node_path.empty())
        throw std::invalid_argument("backup: empty path");
    for (SearchNode* n : node_path) {
        n->visits += 1;
        n->value_sum += value;
        if (n->reevaluated) {
            n->refined_visits += 1;
            n->refined_value_sum += value;
        }
    }
}

/// Debug dump: one JSON object per line, preorder.
inline void dump_tree(std::ostream& os, const SearchNode& node) {
    char buf[64];
    os << "{\"path\":[";
    for (std::size_t i = 0; i < node.removed_path.size(); ++i) {
        if (i) os << ',';
        os << node.removed_path[i];
    }
    os << "],\"visits\":" << node.visits << ",\"mean\":";
    if (node.visits > 0) {
        std::snprintf(buf, sizeof buf, "%.17g", node.mean());
        os << buf;
    } else {
        os << "null";
    }
    os << ",\"refined_mean\":";
    if (node.refined_visits > 0) {
        std::snprintf(buf, sizeof buf, "%.17g", node.refined_mean());
        os << buf;
    } else {
        os << "null";
    }
    os << ",\"reevaluated\":" << (node.reevaluated ? "true" : "false") << "}\n";
    for (const auto& c : node.children) dump_tree(os, *c);
}

} // namespace smcts
