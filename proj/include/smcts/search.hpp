#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "smcts/evaluation.hpp"
#include "smcts/tree.hpp"

namespace smcts {

enum class TraceKind { Evaluate, Reevaluate, Rescore };

/// One evaluator invocation. Evaluate entries carry the selected action;
/// Reevaluate entries carry the re-scored child's action; the single final
/// Rescore entry uses kNoAction. Rewards are negated losses throughout.
struct TraceStep {
    TraceKind kind;
    StoreId action;
    double reward;

    bool operator==(const TraceStep&) const = default;
};

inline constexpr StoreId kNoAction = -1;

struct SearchResult {
    std::vector<StoreId> best_closure_set; // sorted, |set| = M
    double best_loss_main = 0.0;           // re-scored with the main function
    std::uint64_t fs_calls = 0;
    std::uint64_t fm_calls = 0;
    std::uint64_t reevaluation_invocations = 0;
    std::uint64_t reevaluated_children = 0;
    std::uint64_t iterations_used = 0; // evaluation steps performed
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
    std::vector<TraceStep> trace;
};

/// True iff every child has the same visit count and all have been visited
/// at least once. Never fires on freshly expanded (all-zero) children.
inline bool equally_visited(const SearchNode& node) {
    if (node.children.empty()) return false;
    const int first = node.children.front()->visits;
    if (first < 1) return false;
    for (const auto& c : node.children)
        if (c->visits != first) return false;
    return true;
}

/// Re-evaluation pass over one node's children: sorts them ascending by
/// current value and re-scores both members of every adjacent pair whose
/// sigma_s-intervals overlap, i.e. whenever v[i+1] - sigma < v[i] + sigma.
/// The first re-score initializes a child's refined statistics with the
/// main-function value and switches it to refined selection; later re-scores
/// and ordinary backups keep accumulating into them. A single pass over the
/// snapshot taken at sort time: no re-sorting, comparisons use the pre-pass
/// values, and a child is re-scored at most once.
///
/// Returns the number of children re-evaluated. Fewer than two children is a
/// no-op.
inline int reevaluate_children(SearchNode& node, const StoreNetwork& network,
                               const Evaluator& main_eval, double sigma_s,
                               std::vector<TraceStep>* trace = nullptr) {
    if (node.children.size() < 2) return 0;
    for (const auto& c : node.children)
        if (c->visits < 1)
            throw std::logic_error("reevaluate_children: unvisited child");

    std::vector<SearchNode*> order;
    order.reserve(node.children.size());
    for (auto& c : node.children) order.push_back(c.get());
    std::sort(order.begin(), order.end(), [](const SearchNode* a, const SearchNode* b) {
        const double ma = a->selection_mean(), mb = b->selection_mean();
        if (ma != mb) return ma < mb;
        return a->action() < b->action();
    });
    std::vector<double> value(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) value[i] = order[i]->selection_mean();

    auto rescore = [&](SearchNode* child) {
        const double reward = -main_eval.evaluate(network, child->closure_state());
        child->refined_value_sum += reward;
        child->refined_visits += 1;
        child->reevaluated = true;
        if (trace) trace->push_back({TraceKind::Reevaluate, child->action(), reward});
    };

    int count = 0;
    std::vector<bool> done(order.size(), false);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        if (value[i + 1] - sigma_s < value[i] + sigma_s) {
            if (!done[i + 1]) {
                rescore(order[i + 1]);
                done[i + 1] = true;
                ++count;
            }
            if (!done[i]) {
                rescore(order[i]);
                done[i] = true;
                ++count;
            }
        }
    }
    return count;
}

/// Best visited terminal by node value (refined statistics where available),
/// with its closure set re-scored once by the main function.
struct Extraction {
    std::vector<StoreId> closure_set;
    double loss_main = 0.0;
};

inline Extraction extract_solution(const SearchNode& root, const StoreNetwork& network,
                                   const Evaluator& main_eval, TieBreak tie_break,
                                   std::mt19937_64& rng,
                                   std::vector<TraceStep>* trace = nullptr) {
    std::vector<const SearchNode*> terminals;
    std::vector<const SearchNode*> stack{&root};
    while (!stack.empty()) {
        const SearchNode* n = stack.back();
        stack.pop_back();
        if (n->terminal && n->visits >= 1) terminals.push_back(n);
        for (const auto& c : n->children) stack.push_back(c.get());
    }
    if (terminals.empty())
        throw std::runtime_error(
            "no terminal node visited within budget; increase budget_iterations");

    auto tied = detail::argmax_set(terminals,
                                   [](const SearchNode* n) { return n->selection_mean(); });
    const SearchNode* best = tied.front();
    if (tied.size() > 1) {
        if (tie_break == TieBreak::RandomSeeded) {
            best = detail::pick_uniform(tied, rng);
        } else {
            // Lexicographically smallest closure set.
            std::vector<StoreId> best_set = best->closure_state().closed();
            for (const SearchNode* n : tied) {
                std::vector<StoreId> set = n->closure_state().closed();
                if (set < best_set) {
                    best = n;
                    best_set = std::move(set);
                }
            }
        }
    }

    Extraction out;
    const ClosureState state = best->closure_state();
    out.closure_set = state.closed();
    out.loss_main = main_eval.evaluate(network, state);
    if (trace) trace->push_back({TraceKind::Rescore, kNoAction, -out.loss_main});
    return out;
}

namespace detail {

/// Shared search loop. Each evaluation step selects one child along the
/// current descent, expands it on first visit, scores it with the node
/// evaluator, and backs the reward up the path. Whenever the just-evaluated
/// node's children are equally visited, the re-evaluation pass may refine
/// them with the main function. A descent runs from the root to a terminal
/// node; the budget is counted in evaluation steps and checked before each.
inline SearchResult run_search_loop(const StoreNetwork& network,
                                    const Evaluator& node_eval,
                                    bool node_eval_is_surrogate_slot,
                                    const Evaluator& main_eval, double sigma_s,
                                    const SearchConfig& config,
                                    SearchNode* tree_out = nullptr) {
    config.validate(network.size());
    if (!(sigma_s >= 0.0))
        throw std::invalid_argument("sigma_s must be >= 0");

    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    };

    SearchResult result;
    result.seed = config.seed;
    std::mt19937_64 rng(config.seed);

    SearchNode root;
    expand(root, network, config.M);

    std::uint64_t node_evals = 0;
    std::vector<SearchNode*> path;
    bool budget_left = true;
    while (budget_left) {
        SearchNode* s = &root;
        path.clear();
        path.push_back(s);
        while (!s->terminal) {
            if (node_evals >= config.budget_iterations ||
                (config.budget_seconds && elapsed() >= *config.budget_seconds)) {
                budget_left = false;
                break;
            }
            const StoreId a = select_child(*s, config, rng);
            s = find_child(*s, a);
            path.push_back(s);
            if (s->leaf && !s->terminal) expand(*s, network, config.M);

            const double reward = -node_eval.evaluate(network, s->closure_state());
            ++node_evals;
            backup(path, reward);
            result.trace.push_back({TraceKind::Evaluate, a, reward});

            if (config.reevaluation_enabled && !s->leaf && equally_visited(*s)) {
                result.reevaluation_invocations += 1;
                const int n = reevaluate_children(*s, network, main_eval, sigma_s,
                                                  &result.trace);
                result.reevaluated_children += static_cast<std::uint64_t>(n);
                result.fm_calls += static_cast<std::uint64_t>(n);
            }
        }
    }

    result.iterations_used = node_evals;
    if (node_eval_is_surrogate_slot)
        result.fs_calls += node_evals;
    else
        result.fm_calls += node_evals;

    Extraction best = extract_solution(root, network, main_eval, config.tie_break, rng,
                                       &result.trace);
    result.fm_calls += 1;
    result.best_closure_set = std::move(best.closure_set);
    result.best_loss_main = best.loss_main;
    result.wall_seconds = elapsed();
    if (tree_out) *tree_out = std::move(root);
    return result;
}

} // namespace detail

/// Surrogate-assisted MCTS: per-node evaluations use the surrogate, the
/// re-evaluation pass and the final re-score use the main function.
inline SearchResult run_smcts(const StoreNetwork& network, const Evaluator& main_eval,
                              const Evaluator& surrogate_eval, double sigma_s,
                              const SearchConfig& config, SearchNode* tree_out = nullptr) {
    return detail::run_search_loop(network, surrogate_eval, true, main_eval, sigma_s,
                                   config, tree_out);
}

/// Unassisted baseline: the same loop with the main function in the node
/// evaluator slot and re-evaluation disabled.
inline SearchResult run_mcts(const StoreNetwork& network, const Evaluator& main_eval,
                             const SearchConfig& config, SearchNode* tree_out = nullptr) {
    SearchConfig baseline = config;
    baseline.reevaluation_enabled = false;
    return detail::run_search_loop(network, main_eval, false, main_eval, 0.0, baseline,
                                   tree_out);
}

} // namespace smcts
