#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <sstream>

#include <json.hpp>

#include "smcts/tree.hpp"
#include "test_helpers.hpp"

using Catch::Approx;
using namespace smcts;

namespace {

// Expanded root over the given network with per-child (value_sum, visits)
// seeded directly.
SearchNode scripted_root(const StoreNetwork& net, int m,
                         const std::vector<std::pair<double, int>>& child_stats) {
    SearchNode root;
    expand(root, net, m);
    REQUIRE(root.children.size() == child_stats.size());
    int total = 0;
    for (std::size_t i = 0; i < child_stats.size(); ++i) {
        root.children[i]->value_sum = child_stats[i].first;
        root.children[i]->visits = child_stats[i].second;
        total += child_stats[i].second;
    }
    root.visits = total;
    return root;
}

} // namespace

TEST_CASE("ucb1_score arithmetic") {
    // mean 0.5, C = 1, N_p = 9, N_s = 1: 0.5 + sqrt(9).
    REQUIRE(ucb1_score(0.5, 1, 9, 1.0, UcbVariant::PaperRatio) == Approx(3.5));
    // C = 0 is pure exploitation.
    REQUIRE(ucb1_score(0.42, 3, 100, 0.0, UcbVariant::PaperRatio) == 0.42);
    // ln(e) = 1.
    REQUIRE(ucb1_score(0.0, 1.0, std::numbers::e, 1.0, UcbVariant::LogRatio) ==
            Approx(1.0));
    REQUIRE_THROWS_AS(ucb1_score(0.0, 0, 5, 1.0, UcbVariant::PaperRatio),
                      std::logic_error);
}

TEST_CASE("expand creates one child per remaining store") {
    const auto net = test::random_network(10, 2);
    SearchNode root;
    expand(root, net, 3);
    REQUIRE(root.children.size() == 10);
    REQUIRE_FALSE(root.leaf);

    SearchNode& child = *root.children[4];
    REQUIRE(child.removed_path.size() == 1);
    expand(child, net, 3);
    REQUIRE(child.children.size() == 9);
    for (const auto& gc : child.children) {
        // Path is the parent's path plus the action, order preserved.
        REQUIRE(gc->removed_path.size() == 2);
        REQUIRE(gc->removed_path[0] == child.removed_path[0]);
        REQUIRE(gc->removed_path[1] != child.removed_path[0]);
        REQUIRE(gc->action() == gc->removed_path[1]);
        REQUIRE_FALSE(gc->terminal);
    }
}

TEST_CASE("expand marks depth-M children terminal and refuses terminals") {
    const auto net = test::fixture3();
    SearchNode root;
    expand(root, net, 1);
    for (const auto& c : root.children) REQUIRE(c->terminal);
    REQUIRE_THROWS_AS(expand(*root.children[0], net, 1), std::logic_error);
}

TEST_CASE("select_child requires children") {
    SearchNode lone;
    SearchConfig cfg;
    std::mt19937_64 rng(1);
    REQUIRE_THROWS_AS(select_child(lone, cfg, rng), std::logic_error);
}

TEST_CASE("select_child picks an unvisited child first") {
    const auto net = test::random_network(5, 4);
    auto root = scripted_root(net, 1,
                              {{-1.0, 2}, {-2.0, 1}, {0.0, 0}, {-0.5, 3}, {-3.0, 1}});
    SearchConfig cfg;
    cfg.tie_break = TieBreak::LowestId;
    std::mt19937_64 rng(1);
    REQUIRE(select_child(root, cfg, rng) == root.children[2]->action());
}

TEST_CASE("select_child with zero exploration is greedy on means") {
    const auto net = test::random_network(4, 4);
    auto root = scripted_root(net, 1, {{-4.0, 2}, {-1.0, 2}, {-6.0, 2}, {-8.0, 2}});
    SearchConfig cfg;
    cfg.exploration_C = 0.0;
    cfg.tie_break = TieBreak::LowestId;
    std::mt19937_64 rng(1);
    REQUIRE(select_child(root, cfg, rng) == root.children[1]->action());
}

TEST_CASE("select_child matches a hand-computed UCB argmax") {
    const auto net = test::random_network(3, 4);
    // Means 0.5, 0.3, 0.6 with visits 2, 1, 4; parent visits 7, C = 1:
    // scores 2.370, 2.945, 1.922 -> the middle child wins.
    auto root = scripted_root(net, 1, {{1.0, 2}, {0.3, 1}, {2.4, 4}});
    SearchConfig cfg;
    cfg.exploration_C = 1.0;
    std::mt19937_64 rng(1);
    REQUIRE(select_child(root, cfg, rng) == root.children[1]->action());
}

TEST_CASE("selection reads refined statistics once a child is re-evaluated") {
    const auto net = test::random_network(3, 4);
    auto root = scripted_root(net, 1, {{-10.0, 1}, {-20.0, 1}, {-30.0, 1}});
    SearchConfig cfg;
    cfg.exploration_C = 0.0;
    cfg.tie_break = TieBreak::LowestId;
    std::mt19937_64 rng(1);
    // Plain statistics prefer the first child...
    REQUIRE(select_child(root, cfg, rng) == root.children[0]->action());
    // ...but refined values flip the ranking.
    root.children[2]->reevaluated = true;
    root.children[2]->refined_value_sum = -1.0;
    root.children[2]->refined_visits = 1;
    REQUIRE(select_child(root, cfg, rng) == root.children[2]->action());
}

TEST_CASE("backup accumulates along the path") {
    SearchNode a, b;
    std::vector<SearchNode*> path{&a, &b};

    backup(path, 0.7);
    REQUIRE(b.visits == 1);
    REQUIRE(b.mean() == Approx(0.7));

    backup(path, 0.2);
    backup(std::vector<SearchNode*>{&a}, 0.4);
    REQUIRE(b.visits == 2);
    REQUIRE(b.mean() == Approx(0.45));
    REQUIRE(a.visits == 3);
    REQUIRE(a.value_sum == Approx(1.3));

    REQUIRE_THROWS_AS(backup(std::vector<SearchNode*>{}, 1.0), std::invalid_argument);
}

TEST_CASE("backup feeds refined statistics only after re-evaluation") {
    SearchNode n;
    std::vector<SearchNode*> path{&n};
    backup(path, 0.2);
    REQUIRE(n.refined_visits == 0);

    n.reevaluated = true;
    n.refined_value_sum = -1.0;
    n.refined_visits = 1;
    backup(path, 0.4);
    REQUIRE(n.visits == 2);
    REQUIRE(n.refined_visits == 2);
    REQUIRE(n.refined_value_sum == Approx(-0.6));
}

TEST_CASE("mean times visits reconstructs the value sum") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> val(-100.0, 100.0);
    SearchNode n;
    std::vector<SearchNode*> path{&n};
    double sum = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double v = val(rng);
        sum += v;
        backup(path, v);
        REQUIRE(n.mean() * n.visits == Approx(sum).epsilon(1e-9));
    }
}

TEST_CASE("tree dump emits one JSON object per node") {
    const auto net = test::fixture3();
    SearchNode root;
    expand(root, net, 2);
    root.visits = 3;
    root.value_sum = -6.0;
    root.children[0]->visits = 1;
    root.children[0]->value_sum = -2.0;

    std::ostringstream out;
    dump_tree(out, root);

    std::istringstream in(out.str());
    std::string line;
    std::vector<nlohmann::json> nodes;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        REQUIRE(j.contains("path"));
        REQUIRE(j.contains("visits"));
        REQUIRE(j.contains("mean"));
        REQUIRE(j.contains("refined_mean"));
        REQUIRE(j.contains("reevaluated"));
        nodes.push_back(j);
    }
    REQUIRE(nodes.size() == 4); // root + 3 children
    REQUIRE(nodes[0]["mean"].get<double>() == Approx(-2.0));
    REQUIRE(nodes[0]["path"].empty());
    // Unvisited children serialize a null mean.
    REQUIRE(nodes[2]["mean"].is_null());
}
