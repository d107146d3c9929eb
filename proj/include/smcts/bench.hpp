#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "smcts/ingest.hpp"
#include "smcts/search.hpp"

namespace smcts {

// ---------------------------------------------------------------------------
// Metrics

/// Sorensen-Dice set similarity: 2|A n B| / (|A| + |B|). Two empty sets
/// count as identical (1.0).
inline double dice_coefficient(std::vector<StoreId> a, std::vector<StoreId> b) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    if (a.empty() && b.empty()) return 1.0;
    std::vector<StoreId> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::back_inserter(common));
    return 2.0 * static_cast<double>(common.size()) /
           static_cast<double>(a.size() + b.size());
}

/// Fraction of all evaluation calls served by the surrogate.
inline double surrogate_ratio(const SearchResult& result) {
    const auto total = result.fs_calls + result.fm_calls;
    if (total == 0)
        throw std::invalid_argument("surrogate_ratio: no evaluation calls recorded");
    return static_cast<double>(result.fs_calls) / static_cast<double>(total);
}

namespace detail {

// Average ranks, ties sharing their mean rank (1-based).
inline std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

} // namespace detail

/// Spearman rank correlation (Pearson correlation of average ranks).
/// Returns 0 when either sequence is constant.
inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman_rho: need two equal-length sequences");
    const auto rx = detail::average_ranks(x);
    const auto ry = detail::average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mean = (n + 1.0) / 2.0;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Ground-truth oracle

inline double combination_count(std::size_t n, std::size_t m) {
    if (m > n) return 0.0;
    m = std::min(m, n - m);
    double c = 1.0;
    for (std::size_t i = 1; i <= m; ++i) {
        c *= static_cast<double>(n - m + i) / static_cast<double>(i);
        if (c > 1e15) return c; // saturate; caller only guards small counts
    }
    return c;
}

struct OracleResult {
    std::vector<StoreId> closure_set; // sorted
    double loss = 0.0;
};

/// Exhaustive minimum over all M-subsets. Ties resolve to the
/// lexicographically smallest id set. Guarded to C(N, M) <= 1e6.
inline OracleResult brute_force_optimal(const StoreNetwork& network, int m,
                                        const Evaluator& main_eval) {
    if (m < 0 || static_cast<std::size_t>(m) > network.size())
        throw std::invalid_argument("brute_force_optimal: need 0 <= M <= N");
    if (combination_count(network.size(), static_cast<std::size_t>(m)) > 1e6)
        throw std::invalid_argument(
            "brute_force_optimal: C(N, M) exceeds 1e6 subsets; run the search instead");

    std::vector<StoreId> ids;
    ids.reserve(network.size());
    for (const auto& s : network.stores()) ids.push_back(s.store_id);
    std::sort(ids.begin(), ids.end());

    OracleResult best;
    bool first = true;
    std::vector<std::size_t> pick(static_cast<std::size_t>(m));
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    while (true) {
        std::vector<StoreId> subset;
        subset.reserve(pick.size());
        for (std::size_t idx : pick) subset.push_back(ids[idx]);
        const double loss = main_eval.evaluate(network, ClosureState(subset));
        // Lexicographic enumeration order makes strict improvement keep the
        // lexicographically smallest among ties.
        if (first || loss < best.loss) {
            best.closure_set = std::move(subset);
            best.loss = loss;
            first = false;
        }
        // Next combination in lexicographic order.
        if (m == 0) break;
        std::size_t i = pick.size();
        while (i > 0) {
            --i;
            if (pick[i] != i + ids.size() - pick.size()) {
                ++pick[i];
                for (std::size_t j = i + 1; j < pick.size(); ++j) pick[j] = pick[j - 1] + 1;
                break;
            }
            if (i == 0) return best;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Experiment sweeps

struct SweepInstance {
    std::string id;
    StoreNetwork network;
};

/// Grid of runs: every (instance, M, nrmse, seed) cell runs SMCTS with a
/// noisy surrogate of that error level plus the unassisted baseline with the
/// same seed, and records the comparison metrics.
struct SweepSpec {
    std::vector<SweepInstance> instances;
    std::vector<int> m_values;
    std::vector<double> nrmse_values;
    std::vector<std::uint64_t> seeds;
    SearchConfig search; // template; M and seed are set per cell
    std::uint64_t surrogate_seed = 1729;
    std::size_t reference_samples = 256;

    void validate() const {
        if (instances.empty())
            throw std::invalid_argument("sweep spec: 'instances' must be non-empty");
        if (m_values.empty())
            throw std::invalid_argument("sweep spec: 'M_values' must be non-empty");
        if (nrmse_values.empty())
            throw std::invalid_argument("sweep spec: 'nrmse_values' must be non-empty");
        if (seeds.empty())
            throw std::invalid_argument("sweep spec: 'seeds' must be non-empty");
        for (double v : nrmse_values)
            if (!(v >= 0.0))
                throw std::invalid_argument("sweep spec: 'nrmse_values' must be >= 0");
        for (const auto& inst : instances) {
            for (int m : m_values) {
                if (m < 1 || static_cast<std::size_t>(m) >= inst.network.size())
                    throw std::invalid_argument("sweep spec: 'M_values' entry " +
                                                std::to_string(m) +
                                                " is not in [1, N) for instance '" +
                                                inst.id + "'");
            }
        }
    }
};

struct SweepRecord {
    std::string instance;
    int m = 0;
    double nrmse = 0.0;
    std::uint64_t seed = 0;
    double surrogate_ratio = 0.0;
    double dice_vs_baseline = 0.0;
    double loss_smcts = 0.0;
    double loss_mcts = 0.0;
    std::uint64_t reevals = 0; // re-evaluated children
    double secs_smcts = 0.0;
    double secs_mcts = 0.0;
};

struct SweepFailure {
    std::string instance;
    int m = 0;
    double nrmse = 0.0;
    std::uint64_t seed = 0;
    std::string error;
};

struct SweepOutcome {
    std::vector<SweepRecord> records;  // deterministic grid order
    std::vector<SweepFailure> failures;
};

inline SweepRecord run_sweep_cell(const SweepInstance& instance, int m, double nrmse,
                                  std::uint64_t seed, const SweepSpec& spec) {
    const StoreNetwork& net = instance.network;
    MainEvaluator main_eval;
    NoisySurrogate surrogate(net, nrmse, spec.surrogate_seed, spec.reference_samples);

    SearchConfig cfg = spec.search;
    cfg.M = m;
    cfg.seed = seed;
    SearchResult smcts = run_smcts(net, main_eval, surrogate, surrogate.sigma_s(), cfg);
    SearchResult mcts = run_mcts(net, main_eval, cfg);

    SweepRecord rec;
    rec.instance = instance.id;
    rec.m = m;
    rec.nrmse = nrmse;
    rec.seed = seed;
    rec.surrogate_ratio = surrogate_ratio(smcts);
    rec.dice_vs_baseline = dice_coefficient(smcts.best_closure_set, mcts.best_closure_set);
    rec.loss_smcts = smcts.best_loss_main;
    rec.loss_mcts = mcts.best_loss_main;
    rec.reevals = smcts.reevaluated_children;
    rec.secs_smcts = smcts.wall_seconds;
    rec.secs_mcts = mcts.wall_seconds;
    return rec;
}

/// Runs the whole grid, optionally across threads. Per-run failures are
/// recorded and the sweep continues; record order is the deterministic
/// instance -> M -> nrmse -> seed nesting regardless of thread scheduling.
inline SweepOutcome run_sweep(const SweepSpec& spec, unsigned jobs = 0) {
    spec.validate();
    struct Cell {
        const SweepInstance* instance;
        int m;
        double nrmse;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (const auto& inst : spec.instances)
        for (int m : spec.m_values)
            for (double nrmse : spec.nrmse_values)
                for (std::uint64_t seed : spec.seeds)
                    cells.push_back({&inst, m, nrmse, seed});

    std::vector<std::optional<SweepRecord>> slots(cells.size());
    std::vector<std::optional<SweepFailure>> fails(cells.size());

    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(cells.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
            const Cell& c = cells[i];
            try {
                slots[i] = run_sweep_cell(*c.instance, c.m, c.nrmse, c.seed, spec);
            } catch (const std::exception& e) {
                fails[i] = SweepFailure{c.instance->id, c.m, c.nrmse, c.seed, e.what()};
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SweepOutcome out;
    for (auto& s : slots)
        if (s) out.records.push_back(std::move(*s));
    for (auto& f : fails)
        if (f) out.failures.push_back(std::move(*f));
    return out;
}

// ---------------------------------------------------------------------------
// CSV emission

namespace detail {

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return f;
}

} // namespace detail

/// Tidy per-run CSV: one row per (instance, M, nrmse, seed).
inline void write_runs_csv(const std::filesystem::path& path,
                           const std::vector<SweepRecord>& records) {
    auto f = detail::open_csv(path);
    f << "instance,M,nrmse,seed,ratio,dice,loss_smcts,loss_mcts,reevals,secs\n";
    for (const auto& r : records) {
        f << detail::csv_escape(r.instance) << ',' << r.m << ',' << detail::fmt_double(r.nrmse)
          << ',' << r.seed << ',' << detail::fmt_double(r.surrogate_ratio) << ','
          << detail::fmt_double(r.dice_vs_baseline) << ',' << detail::fmt_double(r.loss_smcts)
          << ',' << detail::fmt_double(r.loss_mcts) << ',' << r.reevals << ','
          << detail::fmt_double(r.secs_smcts) << '\n';
    }
}

/// Per-cell means, a cell being one (M, nrmse) pair averaged over instances
/// and seeds. Rows sorted by M then nrmse.
inline void write_summary_csv(const std::filesystem::path& path,
                              const std::vector<SweepRecord>& records) {
    struct Acc {
        double ratio = 0, dice = 0, loss_s = 0, loss_m = 0, reevals = 0, secs = 0;
        std::size_t n = 0;
    };
    std::vector<std::pair<std::pair<int, double>, Acc>> cells;
    auto find = [&](int m, double nrmse) -> Acc& {
        for (auto& [key, acc] : cells)
            if (key.first == m && key.second == nrmse) return acc;
        cells.push_back({{m, nrmse}, {}});
        return cells.back().second;
    };
    for (const auto& r : records) {
        Acc& a = find(r.m, r.nrmse);
        a.ratio += r.surrogate_ratio;
        a.dice += r.dice_vs_baseline;
        a.loss_s += r.loss_smcts;
        a.loss_m += r.loss_mcts;
        a.reevals += static_cast<double>(r.reevals);
        a.secs += r.secs_smcts;
        a.n += 1;
    }
    std::sort(cells.begin(), cells.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    auto f = detail::open_csv(path);
    f << "M,nrmse,ratio_mean,dice_mean,loss_smcts_mean,loss_mcts_mean,reevals_mean,"
         "secs_mean,runs\n";
    for (const auto& [key, a] : cells) {
        const double n = static_cast<double>(a.n);
        f << key.first << ',' << detail::fmt_double(key.second) << ','
          << detail::fmt_double(a.ratio / n) << ',' << detail::fmt_double(a.dice / n) << ','
          << detail::fmt_double(a.loss_s / n) << ',' << detail::fmt_double(a.loss_m / n) << ','
          << detail::fmt_double(a.reevals / n) << ',' << detail::fmt_double(a.secs / n) << ','
          << a.n << '\n';
    }
}

inline void write_failures_csv(const std::filesystem::path& path,
                               const std::vector<SweepFailure>& failures) {
    auto f = detail::open_csv(path);
    f << "instance,M,nrmse,seed,error\n";
    for (const auto& r : failures) {
        f << detail::csv_escape(r.instance) << ',' << r.m << ',' << detail::fmt_double(r.nrmse)
          << ',' << r.seed << ',' << detail::csv_escape(r.error) << '\n';
    }
}

} // namespace smcts
