#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "smcts/evaluation.hpp"
#include "smcts/serialize.hpp"
#include "test_helpers.hpp"

using Catch::Approx;
using namespace smcts;

TEST_CASE("main evaluator is exact and counts calls") {
    const auto net = test::fixture3();
    MainEvaluator main_eval;
    REQUIRE(main_eval.kind() == EvaluatorKind::Main);
    REQUIRE(main_eval.sigma_s() == 0.0);

    REQUIRE(main_eval.evaluate(net, ClosureState{}) == 0.0);
    REQUIRE(main_eval.call_count() == 1);
    // Bit-for-bit the network loss.
    for (const auto& state : sample_closure_states(net, 20, 3))
        REQUIRE(main_eval.evaluate(net, state) == net.total_loss(state));
    REQUIRE(main_eval.call_count() == 21);
}

TEST_CASE("naive surrogate ignores recapture") {
    const auto net = test::fixture3(0.5);
    NaiveSurrogate naive;
    REQUIRE(naive.kind() == EvaluatorKind::Surrogate);

    REQUIRE(naive.evaluate(net, ClosureState{}) == 0.0);
    // Close store 2 (b=200): surrogate says 200, the true loss is 100.
    REQUIRE(naive.evaluate(net, ClosureState({2})) == Approx(200.0));
    MainEvaluator main_eval;
    REQUIRE(main_eval.evaluate(net, ClosureState({2})) == Approx(100.0));
}

TEST_CASE("naive surrogate never underestimates the loss") {
    for (std::uint64_t seed : {1ULL, 9ULL}) {
        const auto net = test::random_network(10, seed);
        NaiveSurrogate naive;
        MainEvaluator main_eval;
        for (const auto& state : sample_closure_states(net, 80, seed + 100)) {
            REQUIRE(naive.evaluate(net, state) >=
                    main_eval.evaluate(net, state) - 1e-9);
        }
    }
}

TEST_CASE("evaluators are deterministic given state and seed") {
    const auto net = test::random_network(9, 5);
    NoisySurrogate noisy(net, 0.2, 77);
    for (const auto& state : sample_closure_states(net, 10, 8)) {
        REQUIRE(noisy.evaluate(net, state) == noisy.evaluate(net, state));
    }
    // A separate instance with the same seed is the same function.
    NoisySurrogate twin(net, 0.2, 77);
    const ClosureState probe({net.stores()[0].store_id});
    REQUIRE(noisy.evaluate(net, probe) == twin.evaluate(net, probe));
}

TEST_CASE("noisy surrogate with zero target is exactly the main loss") {
    const auto net = test::random_network(8, 6);
    NoisySurrogate noisy(net, 0.0, 123);
    for (const auto& state : sample_closure_states(net, 20, 9))
        REQUIRE(noisy.evaluate(net, state) == net.total_loss(state));
}

TEST_CASE("noisy surrogate rejects negative targets") {
    const auto net = test::random_network(8, 6);
    REQUIRE_THROWS_AS(NoisySurrogate(net, -0.1, 1), std::invalid_argument);
}

TEST_CASE("noisy surrogate empirical NRMSE lands near the target") {
    const auto net = test::random_network(12, 31);
    const double target = 0.2;
    NoisySurrogate noisy(net, target, 501);

    double se = 0.0;
    const auto states = sample_closure_states(net, 1000, 901);
    for (const auto& state : states) {
        const double d = noisy.evaluate(net, state) - net.total_loss(state);
        se += d * d;
    }
    const double nrmse = std::sqrt(se / 1000.0) / noisy.normalizer();
    REQUIRE(nrmse == Approx(target).epsilon(0.15));
}

TEST_CASE("calibration: surrogate identical to main gives sigma zero") {
    const auto net = test::random_network(8, 13);
    MainEvaluator main_eval, same;
    const auto report = calibrate_sigma(same, main_eval, net, 50, 17);
    REQUIRE(report.sigma_s == 0.0);
    REQUIRE(report.rmse_surrogate == 0.0);
    REQUIRE(report.sample_count == 50);
}

TEST_CASE("sigma is the RMSE difference, clamped at zero") {
    // Published normalized errors 0.27 (surrogate) and 0.16 (main).
    REQUIRE(sigma_from_rmse(0.27, 0.16) == Approx(0.11));
    REQUIRE(sigma_from_rmse(0.10, 0.16) == 0.0);
}

TEST_CASE("calibrated sigma of the naive surrogate equals the recapture-omission RMSE") {
    const auto net = test::random_network(9, 19);
    const double gamma = net.recapture_gamma();

    // The surrogate's error on any state is exactly gamma times the base
    // sales of closed stores that still have an open neighbor.
    auto omission = [&](const ClosureState& state) {
        double err = 0.0;
        for (StoreId id : state.closed()) {
            bool open_neighbor = false;
            for (StoreId nb : net.neighbors_within(id))
                if (!state.is_closed(nb)) open_neighbor = true;
            if (open_neighbor) err += gamma * net.store(id).base_sales;
        }
        return err;
    };

    NaiveSurrogate naive;
    MainEvaluator main_eval;
    for (const auto& state : sample_closure_states(net, 100, 23)) {
        REQUIRE(naive.evaluate(net, state) - main_eval.evaluate(net, state) ==
                Approx(omission(state)).margin(1e-9));
    }

    // Exhaustive check of the same identity on a small instance.
    const auto tiny = test::random_network(5, 77);
    std::vector<StoreId> tiny_ids;
    for (const auto& s : tiny.stores()) tiny_ids.push_back(s.store_id);
    auto tiny_omission = [&](const ClosureState& state) {
        double err = 0.0;
        for (StoreId id : state.closed()) {
            bool open_neighbor = false;
            for (StoreId nb : tiny.neighbors_within(id))
                if (!state.is_closed(nb)) open_neighbor = true;
            if (open_neighbor) err += tiny.recapture_gamma() * tiny.store(id).base_sales;
        }
        return err;
    };
    for (unsigned mask = 1; mask + 1 < (1u << 5); ++mask) {
        std::vector<StoreId> closed;
        for (std::size_t i = 0; i < 5; ++i)
            if (mask & (1u << i)) closed.push_back(tiny_ids[i]);
        const ClosureState state(closed);
        REQUIRE(naive.evaluate(tiny, state) - tiny.total_loss(state) ==
                Approx(tiny_omission(state)).margin(1e-9));
    }

    // Same sampler, same seed: the report's RMSE is the omission RMSE.
    const std::uint64_t seed = 29;
    const std::size_t samples = 200;
    double se = 0.0, max_loss = 0.0;
    for (const auto& state : sample_closure_states(net, samples, seed)) {
        const double e = omission(state);
        se += e * e;
        max_loss = std::max(max_loss, net.total_loss(state));
    }
    const auto report = calibrate_sigma(naive, main_eval, net, samples, seed);
    REQUIRE(report.sigma_s == Approx(std::sqrt(se / samples)).epsilon(1e-12));
    REQUIRE(report.rmse_main == 0.0);
    REQUIRE(report.normalizer == Approx(max_loss));
}

TEST_CASE("calibration rejects an empty sample") {
    const auto net = test::random_network(8, 6);
    NaiveSurrogate naive;
    MainEvaluator main_eval;
    REQUIRE_THROWS_AS(calibrate_sigma(naive, main_eval, net, 0, 1),
                      std::invalid_argument);
}

TEST_CASE("calibration report serializes with its full field set") {
    const auto net = test::random_network(8, 3);
    NaiveSurrogate naive;
    MainEvaluator main_eval;
    const auto report = calibrate_sigma(naive, main_eval, net, 40, 9);
    const auto j = calibration_to_json(report);
    REQUIRE(j.at("sigma_s").get<double>() == report.sigma_s);
    REQUIRE(j.at("rmse_surrogate").get<double>() == report.rmse_surrogate);
    REQUIRE(j.at("rmse_main").get<double>() == 0.0);
    REQUIRE(j.at("sample_count").get<std::size_t>() == 40);
    REQUIRE(j.at("normalizer").get<double>() == report.normalizer);
}

TEST_CASE("sample_closure_states is deterministic and well-formed") {
    const auto net = test::random_network(10, 3);
    const auto a = sample_closure_states(net, 50, 7);
    const auto b = sample_closure_states(net, 50, 7);
    REQUIRE(a.size() == 50);
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i] == b[i]);
        REQUIRE(a[i].count() >= 1);
        REQUIRE(a[i].count() <= net.size() - 1);
        for (StoreId id : a[i].closed()) REQUIRE(net.contains(id));
    }
}
