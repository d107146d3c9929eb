// Command-line front end: instance generation, CSV ingestion, solving,
// brute-force oracle and experiment sweeps.
//
// JSON results go to stdout, logs and warnings to stderr.
// Exit codes: 0 success, 1 usage/config error, 2 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "smcts/smcts.hpp"

namespace fs = std::filesystem;
using smcts::json;

namespace {

constexpr std::uint64_t kCalibrationSeed = 4242;
constexpr std::uint64_t kNoiseSeed = 1729;

struct SolveOptions {
    std::string network_path;
    std::string county;
    int remove = 1;
    std::uint64_t budget = 2000;
    std::optional<double> seconds;
    double exploration_c = 1.0;
    std::string ucb = "paper";
    std::string tie_break = "random";
    std::string surrogate = "naive";
    double nrmse = 0.1;
    std::optional<double> sigma_override;
    std::uint64_t seed = 0;
    bool no_surrogate = false;
    std::size_t calib_samples = 200;
    std::string dump_tree_path;
};

smcts::SearchConfig make_config(const SolveOptions& opt) {
    smcts::SearchConfig cfg;
    cfg.M = opt.remove;
    cfg.budget_iterations = opt.budget;
    cfg.budget_seconds = opt.seconds;
    cfg.exploration_C = opt.exploration_c;
    cfg.seed = opt.seed;
    cfg.ucb_variant =
        opt.ucb == "log" ? smcts::UcbVariant::LogRatio : smcts::UcbVariant::PaperRatio;
    cfg.tie_break =
        opt.tie_break == "lowest" ? smcts::TieBreak::LowestId : smcts::TieBreak::RandomSeeded;
    return cfg;
}

void maybe_dump_tree(const std::string& path, const smcts::SearchNode& root) {
    if (path.empty()) return;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    smcts::dump_tree(f, root);
}

int cmd_solve(const SolveOptions& opt, bool verbose) {
    smcts::StoreNetwork network = smcts::load_network(opt.network_path);
    if (!opt.county.empty()) network = smcts::filter_county(network, opt.county);
    const smcts::SearchConfig cfg = make_config(opt);
    smcts::MainEvaluator main_eval;

    smcts::SearchResult result;
    smcts::SearchNode tree;
    smcts::SearchNode* tree_out = opt.dump_tree_path.empty() ? nullptr : &tree;

    if (opt.no_surrogate) {
        result = smcts::run_mcts(network, main_eval, cfg, tree_out);
    } else if (opt.surrogate == "noisy") {
        smcts::NoisySurrogate fs(network, opt.nrmse, kNoiseSeed);
        const double sigma = opt.sigma_override.value_or(fs.sigma_s());
        if (verbose)
            std::cerr << "noisy surrogate: nrmse " << opt.nrmse << ", sigma_s " << sigma
                      << " (normalizer " << fs.normalizer() << ")\n";
        result = smcts::run_smcts(network, main_eval, fs, sigma, cfg, tree_out);
    } else {
        smcts::NaiveSurrogate fs;
        double sigma;
        if (opt.sigma_override) {
            sigma = *opt.sigma_override;
        } else {
            const auto report = smcts::calibrate_sigma(fs, main_eval, network,
                                                       opt.calib_samples, kCalibrationSeed);
            sigma = report.sigma_s;
            if (verbose)
                std::cerr << "calibration: " << smcts::calibration_to_json(report).dump()
                          << "\n";
        }
        fs.set_sigma_s(sigma);
        result = smcts::run_smcts(network, main_eval, fs, sigma, cfg, tree_out);
    }

    maybe_dump_tree(opt.dump_tree_path, tree);
    std::cout << smcts::result_to_json(result).dump(2) << std::endl;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surrogate-assisted MCTS solver for store-closure planning"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "chatty logs on stderr");

    // --- gen ----------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate a seeded synthetic store network");
    smcts::SyntheticSpec gen_spec;
    std::string gen_out = "-";
    gen->add_option("--n", gen_spec.n_stores, "number of stores")->capture_default_str();
    gen->add_option("--seed", gen_spec.seed, "generator seed")->capture_default_str();
    gen->add_option("--clusters", gen_spec.cluster_count, "cluster count")
        ->capture_default_str();
    gen->add_option("--mu", gen_spec.sales_mu, "lognormal mu of annual sales")
        ->capture_default_str();
    gen->add_option("--sigma", gen_spec.sales_sigma, "lognormal sigma of annual sales")
        ->capture_default_str();
    gen->add_option("--scatter", gen_spec.scatter_miles, "cluster scatter, miles")
        ->capture_default_str();
    gen->add_option("--radius", gen_spec.radius_miles, "neighbor radius, miles")
        ->capture_default_str();
    gen->add_option("--gamma", gen_spec.recapture_gamma, "recapture fraction")
        ->capture_default_str();
    gen->add_option("--out", gen_out, "output path, - for stdout")->capture_default_str();

    // --- ingest --------------------------------------------------------------
    auto* ingest = app.add_subcommand("ingest", "aggregate a transaction CSV into a network");
    std::string ing_csv, ing_out, ing_map, ing_county;
    double ing_radius = 0.5, ing_gamma = 0.5;
    ingest->add_option("--csv", ing_csv, "transaction CSV path")->required();
    ingest->add_option("--out", ing_out, "network JSON output path")->required();
    ingest->add_option("--column-map", ing_map,
                       "JSON object mapping logical column names to file headers");
    ingest->add_option("--radius", ing_radius, "neighbor radius, miles")
        ->capture_default_str();
    ingest->add_option("--gamma", ing_gamma, "recapture fraction")->capture_default_str();
    ingest->add_option("--county", ing_county, "keep only one county's stores");

    // --- solve ---------------------------------------------------------------
    auto* solve = app.add_subcommand("solve", "search for the minimum-loss closure set");
    SolveOptions sol;
    solve->add_option("--network", sol.network_path, "network JSON path")->required();
    solve->add_option("--county", sol.county, "restrict the search to one county");
    solve->add_option("--remove,-M", sol.remove, "number of stores to close (M)")
        ->required();
    solve->add_option("--budget", sol.budget, "evaluation budget")->capture_default_str();
    double sol_seconds = 0.0;
    auto* sec_opt = solve->add_option("--seconds", sol_seconds, "wall-clock budget");
    solve->add_option("--C", sol.exploration_c, "UCB exploration constant (reward units)")
        ->capture_default_str();
    solve->add_option("--ucb", sol.ucb, "UCB variant")
        ->check(CLI::IsMember({"paper", "log"}))
        ->capture_default_str();
    solve->add_option("--tie-break", sol.tie_break, "tie-break policy")
        ->check(CLI::IsMember({"lowest", "random"}))
        ->capture_default_str();
    solve->add_option("--surrogate", sol.surrogate, "surrogate family")
        ->check(CLI::IsMember({"naive", "noisy"}))
        ->capture_default_str();
    solve->add_option("--nrmse", sol.nrmse, "target normalized RMSE of the noisy surrogate")
        ->capture_default_str();
    double sol_sigma = 0.0;
    auto* sigma_opt =
        solve->add_option("--sigma", sol_sigma, "override sigma_s (absolute loss units)");
    solve->add_option("--seed", sol.seed, "search seed")->capture_default_str();
    solve->add_flag("--no-surrogate", sol.no_surrogate,
                    "run the unassisted baseline (main function only)");
    solve->add_option("--calib-samples", sol.calib_samples,
                      "states sampled when calibrating sigma_s")
        ->capture_default_str();
    solve->add_option("--dump-tree", sol.dump_tree_path,
                      "write the final search tree as JSON lines");

    // --- oracle ----------------------------------------------------------------
    auto* oracle = app.add_subcommand("oracle", "exhaustive optimum for small instances");
    std::string ora_network, ora_county;
    int ora_remove = 1;
    oracle->add_option("--network", ora_network, "network JSON path")->required();
    oracle->add_option("--remove,-M", ora_remove, "number of stores to close")->required();
    oracle->add_option("--county", ora_county, "restrict the oracle to one county");

    // --- sweep -----------------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "run an experiment grid, emit CSVs");
    std::string sw_spec, sw_out;
    unsigned sw_jobs = 0;
    sweep->add_option("--spec", sw_spec, "sweep spec JSON path")->required();
    sweep->add_option("--out", sw_out, "output directory")->required();
    sweep->add_option("--jobs", sw_jobs, "parallel cells, 0 = hardware")
        ->capture_default_str();

    try {
        app.parse(argc, argv);

        if (gen->parsed()) {
            const auto network = smcts::generate_synthetic(gen_spec);
            if (gen_out == "-") {
                std::cout << smcts::network_to_json(network).dump(2) << std::endl;
            } else {
                smcts::save_network(network, gen_out);
                std::cerr << "wrote " << gen_out << " (" << network.size() << " stores)\n";
            }
            return 0;
        }

        if (ingest->parsed()) {
            std::ifstream f(ing_csv);
            if (!f) throw std::runtime_error("cannot read CSV file '" + ing_csv + "'");
            smcts::ColumnMap map;
            if (!ing_map.empty()) map = smcts::load_column_map(ing_map);
            auto report = smcts::aggregate_transactions(f, map, ing_radius, ing_gamma);
            if (!ing_county.empty()) {
                report.network = smcts::filter_county(report.network, ing_county);
                report.total_sales_included = report.network.total_base_sales();
            }
            const std::size_t shown =
                verbose ? report.warnings.size() : std::min<std::size_t>(5, report.warnings.size());
            for (std::size_t i = 0; i < shown; ++i)
                std::cerr << "warning: " << report.warnings[i] << "\n";
            if (shown < report.warnings.size())
                std::cerr << "... " << report.warnings.size() - shown
                          << " more warnings (use --verbose)\n";
            smcts::save_network(report.network, ing_out);
            std::cout << json{{"stores", report.network.size()},
                              {"total_sales", report.total_sales_included},
                              {"mean_neighbor_degree", report.network.mean_neighbor_degree()},
                              {"rows_used", report.rows_used},
                              {"rows_skipped", report.rows_skipped}}
                             .dump(2)
                      << std::endl;
            return 0;
        }

        if (solve->parsed()) {
            if (*sec_opt) sol.seconds = sol_seconds;
            if (*sigma_opt) sol.sigma_override = sol_sigma;
            return cmd_solve(sol, verbose);
        }

        if (oracle->parsed()) {
            auto network = smcts::load_network(ora_network);
            if (!ora_county.empty()) network = smcts::filter_county(network, ora_county);
            smcts::MainEvaluator main_eval;
            const auto best = smcts::brute_force_optimal(network, ora_remove, main_eval);
            std::cout << json{{"closed", best.closure_set}, {"loss", best.loss}}.dump(2)
                      << std::endl;
            return 0;
        }

        if (sweep->parsed()) {
            const auto spec = smcts::load_sweep_spec(sw_spec);
            fs::create_directories(sw_out);
            const auto outcome = smcts::run_sweep(spec, sw_jobs);
            smcts::write_runs_csv(fs::path(sw_out) / "runs.csv", outcome.records);
            smcts::write_summary_csv(fs::path(sw_out) / "summary.csv", outcome.records);
            if (!outcome.failures.empty())
                smcts::write_failures_csv(fs::path(sw_out) / "failures.csv", outcome.failures);
            std::cerr << "sweep: " << outcome.records.size() << " runs, "
                      << outcome.failures.size() << " failures\n";
            if (outcome.records.empty() && !outcome.failures.empty()) {
                std::cerr << "error: every sweep cell failed; see failures.csv\n";
                return 2;
            }
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
