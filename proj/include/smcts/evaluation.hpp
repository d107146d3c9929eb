#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "smcts/network.hpp"

namespace smcts {

enum class EvaluatorKind { Main, Surrogate };

/// Loss estimator for a closure state. Implementations are pure functions of
/// (network, state) apart from the call counter, which increments by exactly
/// one per evaluate() and is safe to bump from concurrent searches.
class Evaluator {
public:
    virtual ~Evaluator() = default;

    double evaluate(const StoreNetwork& network, const ClosureState& state) const {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return do_evaluate(network, state);
    }

    EvaluatorKind kind() const { return kind_; }

    /// Excess error bound versus the main evaluator, in loss units.
    double sigma_s() const { return sigma_s_; }
    void set_sigma_s(double sigma) {
        if (!(sigma >= 0.0)) throw std::invalid_argument("sigma_s must be >= 0");
        sigma_s_ = sigma;
    }

    std::uint64_t call_count() const { return calls_.load(std::memory_order_relaxed); }

protected:
    explicit Evaluator(EvaluatorKind kind, double sigma = 0.0)
        : kind_(kind), sigma_s_(sigma) {}

private:
    virtual double do_evaluate(const StoreNetwork&, const ClosureState&) const = 0;

    EvaluatorKind kind_;
    double sigma_s_;
    mutable std::atomic<std::uint64_t> calls_{0};
};

/// Ground truth within this artifact: the network's recapture-model loss.
class MainEvaluator final : public Evaluator {
public:
    MainEvaluator() : Evaluator(EvaluatorKind::Main, 0.0) {}

private:
    double do_evaluate(const StoreNetwork& network, const ClosureState& state) const override {
        return network.total_loss(state);
    }
};

/// Structural surrogate: sums the base sales of the closed stores and
/// ignores recapture entirely. Overestimates the true loss whenever a closed
/// store has an open neighbor, by exactly gamma times that store's sales.
class NaiveSurrogate final : public Evaluator {
public:
    explicit NaiveSurrogate(double sigma = 0.0) : Evaluator(EvaluatorKind::Surrogate, sigma) {}

private:
    double do_evaluate(const StoreNetwork& network, const ClosureState& state) const override {
        double loss = 0.0;
        for (StoreId id : state.closed()) loss += network.store(id).base_sales;
        return loss;
    }
};

// ---------------------------------------------------------------------------
// Random closure states and noise hashing

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Order-independent hash of a closure state mixed with a seed; drives the
/// noisy surrogate's per-state noise draw.
inline std::uint64_t hash_closure(const ClosureState& state, std::uint64_t seed) {
    std::uint64_t h = splitmix64(seed ^ 0x5157c5157c5157c5ULL);
    for (StoreId id : state.closed()) h = splitmix64(h ^ static_cast<std::uint64_t>(id));
    return h;
}

/// Uniform random closure states: depth drawn uniformly from 1..N-1, then a
/// uniform subset of that size. Covers every tree depth without favoring any
/// particular removal count.
inline std::vector<ClosureState> sample_closure_states(const StoreNetwork& network,
                                                       std::size_t count,
                                                       std::uint64_t seed) {
    if (network.size() < 2)
        throw std::invalid_argument("sample_closure_states: need at least 2 stores");
    std::mt19937_64 rng(seed);
    std::vector<StoreId> ids;
    ids.reserve(network.size());
    for (const auto& s : network.stores()) ids.push_back(s.store_id);
    std::sort(ids.begin(), ids.end());

    std::uniform_int_distribution<std::size_t> depth_dist(1, network.size() - 1);
    std::vector<ClosureState> states;
    states.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t depth = depth_dist(rng);
        // Partial Fisher-Yates: first `depth` entries become a uniform subset.
        std::vector<StoreId> pool = ids;
        for (std::size_t j = 0; j < depth; ++j) {
            std::uniform_int_distribution<std::size_t> pick(j, pool.size() - 1);
            std::swap(pool[j], pool[pick(rng)]);
        }
        pool.resize(depth);
        states.emplace_back(std::move(pool));
    }
    return states;
}

/// Synthetic surrogate: main loss plus a zero-mean Gaussian perturbation.
/// The perturbation scales with the state's own loss, so the error stays
/// proportionally meaningful from shallow to deep closure sets, and the
/// relative scale is calibrated at construction so the normalized RMSE over
/// a reference state sample matches the target. The excess error bound is
/// then sigma_s = target_nrmse * normalizer exactly.
///
/// Deterministic per (state, seed): the closed set is hashed into the noise
/// stream, so repeated evaluations of the same state agree.
class NoisySurrogate final : public Evaluator {
public:
    NoisySurrogate(const StoreNetwork& network, double target_nrmse,
                   std::uint64_t seed, std::size_t reference_samples = 256)
        : Evaluator(EvaluatorKind::Surrogate), seed_(seed) {
        if (!(target_nrmse >= 0.0))
            throw std::invalid_argument("target_nrmse must be >= 0");
        normalizer_ = 0.0;
        double sq = 0.0;
        const auto states = sample_closure_states(network, reference_samples, seed);
        for (const auto& st : states) {
            const double loss = network.total_loss(st);
            normalizer_ = std::max(normalizer_, loss);
            sq += loss * loss;
        }
        const double rms = std::sqrt(sq / static_cast<double>(states.size()));
        // RMSE = relative_sigma * RMS(loss); pick the relative scale so
        // RMSE / normalizer hits the target.
        relative_sigma_ = rms > 0.0 ? target_nrmse * normalizer_ / rms : 0.0;
        set_sigma_s(target_nrmse * normalizer_);
    }

    /// Max loss observed in the reference sample; the NRMSE denominator.
    double normalizer() const { return normalizer_; }
    double relative_sigma() const { return relative_sigma_; }

private:
    double do_evaluate(const StoreNetwork& network, const ClosureState& state) const override {
        const double exact = network.total_loss(state);
        if (relative_sigma_ == 0.0) return exact;
        std::mt19937_64 gen(hash_closure(state, seed_));
        std::normal_distribution<double> unit(0.0, 1.0);
        return exact * (1.0 + relative_sigma_ * unit(gen));
    }

    std::uint64_t seed_;
    double normalizer_ = 0.0;
    double relative_sigma_ = 0.0;
};

// ---------------------------------------------------------------------------
// Calibration

/// Result of measuring a surrogate against the main evaluator on a random
/// state sample. sigma_s is the RMSE difference, clamped at zero; the
/// normalizer (max observed loss) converts between absolute and normalized
/// error units.
struct CalibrationReport {
    double rmse_main = 0.0;
    double rmse_surrogate = 0.0;
    double sigma_s = 0.0;
    std::size_t sample_count = 0;
    double normalizer = 0.0;

    double normalized_sigma() const {
        return normalizer > 0.0 ? sigma_s / normalizer : 0.0;
    }
};

inline double sigma_from_rmse(double rmse_surrogate, double rmse_main) {
    return std::max(0.0, rmse_surrogate - rmse_main);
}

/// Samples `sample_size` random closure states, scores both evaluators
/// against ground truth (the network's own loss model) and reports the
/// surrogate's excess RMSE.
inline CalibrationReport calibrate_sigma(const Evaluator& surrogate,
                                         const Evaluator& main,
                                         const StoreNetwork& network,
                                         std::size_t sample_size,
                                         std::uint64_t seed) {
    if (sample_size == 0)
        throw std::invalid_argument("calibrate_sigma: sample_size must be >= 1");
    const auto states = sample_closure_states(network, sample_size, seed);
    double se_main = 0.0, se_sur = 0.0, max_loss = 0.0;
    for (const auto& st : states) {
        const double truth = network.total_loss(st);
        const double dm = main.evaluate(network, st) - truth;
        const double ds = surrogate.evaluate(network, st) - truth;
        se_main += dm * dm;
        se_sur += ds * ds;
        max_loss = std::max(max_loss, truth);
    }
    CalibrationReport report;
    report.sample_count = sample_size;
    report.rmse_main = std::sqrt(se_main / static_cast<double>(sample_size));
    report.rmse_surrogate = std::sqrt(se_sur / static_cast<double>(sample_size));
    report.sigma_s = sigma_from_rmse(report.rmse_surrogate, report.rmse_main);
    report.normalizer = max_loss;
    return report;
}

} // namespace smcts
