#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "smcts/bench.hpp"
#include "smcts/evaluation.hpp"
#include "smcts/ingest.hpp"
#include "smcts/network.hpp"
#include "smcts/search.hpp"

namespace smcts {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Store network <-> JSON
// {"stores": [{id, name, lat, lon, county, city, zip, base_sales}, ...],
//  "radius_miles": r, "recapture_gamma": g}

inline json network_to_json(const StoreNetwork& network) {
    json stores = json::array();
    for (const auto& s : network.stores()) {
        stores.push_back({{"id", s.store_id},
                          {"name", s.name},
                          {"lat", s.latitude},
                          {"lon", s.longitude},
                          {"county", s.county},
                          {"city", s.city},
                          {"zip", s.zip},
                          {"base_sales", s.base_sales}});
    }
    return json{{"stores", std::move(stores)},
                {"radius_miles", network.radius_miles()},
                {"recapture_gamma", network.recapture_gamma()}};
}

inline StoreNetwork network_from_json(const json& j) {
    std::vector<StoreRecord> stores;
    for (const auto& js : j.at("stores")) {
        StoreRecord s;
        s.store_id = js.at("id").get<StoreId>();
        s.name = js.value("name", std::string{});
        s.latitude = js.at("lat").get<double>();
        s.longitude = js.at("lon").get<double>();
        s.county = js.value("county", std::string{});
        s.city = js.value("city", std::string{});
        s.zip = js.value("zip", std::string{});
        s.base_sales = js.at("base_sales").get<double>();
        stores.push_back(std::move(s));
    }
    return StoreNetwork(std::move(stores), j.value("radius_miles", 0.5),
                        j.value("recapture_gamma", 0.5));
}

inline void save_network(const StoreNetwork& network, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    f << network_to_json(network).dump(2) << '\n';
}

inline StoreNetwork load_network(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read network file '" + path.string() + "'");
    return network_from_json(json::parse(f));
}

// ---------------------------------------------------------------------------
// Search result / calibration report

inline json result_to_json(const SearchResult& r) {
    return json{{"closed", r.best_closure_set},
                {"loss", r.best_loss_main},
                {"fs_calls", r.fs_calls},
                {"fm_calls", r.fm_calls},
                {"reevals", r.reevaluated_children},
                {"iterations", r.iterations_used},
                {"seconds", r.wall_seconds},
                {"seed", r.seed}};
}

inline json calibration_to_json(const CalibrationReport& c) {
    return json{{"rmse_main", c.rmse_main},
                {"rmse_surrogate", c.rmse_surrogate},
                {"sigma_s", c.sigma_s},
                {"sample_count", c.sample_count},
                {"normalizer", c.normalizer}};
}

// ---------------------------------------------------------------------------
// Ingest configuration

inline ColumnMap column_map_from_json(const json& j) {
    ColumnMap map;
    for (const auto& [logical, actual] : j.items()) {
        const auto& known = logical_columns();
        if (std::find(known.begin(), known.end(), logical) == known.end())
            throw std::invalid_argument("column map: unknown logical column '" + logical +
                                        "'");
        map[logical] = actual.get<std::string>();
    }
    return map;
}

inline ColumnMap load_column_map(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read column map '" + path.string() + "'");
    return column_map_from_json(json::parse(f));
}

// ---------------------------------------------------------------------------
// Synthetic + sweep specs

inline SyntheticSpec synthetic_spec_from_json(const json& j) {
    SyntheticSpec spec;
    spec.n_stores = j.value("n_stores", spec.n_stores);
    spec.seed = j.value("seed", spec.seed);
    spec.cluster_count = j.value("cluster_count", spec.cluster_count);
    if (j.contains("area")) {
        const auto& a = j.at("area");
        spec.area.min_lat = a.at("min_lat").get<double>();
        spec.area.min_lon = a.at("min_lon").get<double>();
        spec.area.max_lat = a.at("max_lat").get<double>();
        spec.area.max_lon = a.at("max_lon").get<double>();
    }
    if (j.contains("sales_lognormal")) {
        const auto& s = j.at("sales_lognormal");
        spec.sales_mu = s.at("mu").get<double>();
        spec.sales_sigma = s.at("sigma").get<double>();
    }
    spec.scatter_miles = j.value("scatter_miles", spec.scatter_miles);
    spec.radius_miles = j.value("radius_miles", spec.radius_miles);
    spec.recapture_gamma = j.value("recapture_gamma", spec.recapture_gamma);
    spec.validate();
    return spec;
}

inline SearchConfig search_config_from_json(const json& j) {
    SearchConfig cfg;
    cfg.exploration_C = j.value("exploration_C", cfg.exploration_C);
    cfg.budget_iterations = j.value("budget_iterations", cfg.budget_iterations);
    if (j.contains("budget_seconds") && !j.at("budget_seconds").is_null())
        cfg.budget_seconds = j.at("budget_seconds").get<double>();
    if (j.contains("ucb_variant")) {
        const std::string v = j.at("ucb_variant").get<std::string>();
        if (v == "paper") cfg.ucb_variant = UcbVariant::PaperRatio;
        else if (v == "log") cfg.ucb_variant = UcbVariant::LogRatio;
        else throw std::invalid_argument("search config: 'ucb_variant' must be paper|log");
    }
    if (j.contains("tie_break")) {
        const std::string v = j.at("tie_break").get<std::string>();
        if (v == "lowest") cfg.tie_break = TieBreak::LowestId;
        else if (v == "random") cfg.tie_break = TieBreak::RandomSeeded;
        else throw std::invalid_argument("search config: 'tie_break' must be lowest|random");
    }
    cfg.reevaluation_enabled = j.value("reevaluation_enabled", cfg.reevaluation_enabled);
    return cfg;
}

/// Parses a sweep spec document. Instance entries are either
/// {"id", "type": "synthetic", ...generator fields...} or
/// {"id", "type": "network", "path": ..., "county"?: ...}; relative paths
/// resolve against `base_dir`.
inline SweepSpec sweep_spec_from_json(const json& j,
                                      const std::filesystem::path& base_dir = {}) {
    SweepSpec spec;
    if (!j.contains("instances"))
        throw std::invalid_argument("sweep spec: missing field 'instances'");
    for (const auto& ji : j.at("instances")) {
        SweepInstance inst{ji.value("id", std::string{}),
                           StoreNetwork(std::vector<StoreRecord>{})};
        const std::string type = ji.value("type", std::string{});
        if (type == "synthetic") {
            inst.network = generate_synthetic(synthetic_spec_from_json(ji));
            if (inst.id.empty())
                inst.id = "syn" + std::to_string(inst.network.size()) + "-" +
                          std::to_string(ji.value("seed", SyntheticSpec{}.seed));
        } else if (type == "network") {
            if (!ji.contains("path"))
                throw std::invalid_argument("sweep spec: network instance missing 'path'");
            std::filesystem::path p = ji.at("path").get<std::string>();
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            inst.network = load_network(p);
            if (ji.contains("county"))
                inst.network = filter_county(inst.network, ji.at("county").get<std::string>());
            if (inst.id.empty()) inst.id = p.filename().string();
        } else {
            throw std::invalid_argument(
                "sweep spec: instance 'type' must be synthetic|network");
        }
        spec.instances.push_back(std::move(inst));
    }
    if (spec.instances.empty())
        throw std::invalid_argument("sweep spec: 'instances' must be non-empty");
    if (!j.contains("M_values"))
        throw std::invalid_argument("sweep spec: missing field 'M_values'");
    spec.m_values = j.at("M_values").get<std::vector<int>>();
    if (!j.contains("nrmse_values"))
        throw std::invalid_argument("sweep spec: missing field 'nrmse_values'");
    spec.nrmse_values = j.at("nrmse_values").get<std::vector<double>>();
    if (!j.contains("seeds"))
        throw std::invalid_argument("sweep spec: missing field 'seeds'");
    spec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("search")) spec.search = search_config_from_json(j.at("search"));
    spec.surrogate_seed = j.value("surrogate_seed", spec.surrogate_seed);
    spec.reference_samples = j.value("reference_samples", spec.reference_samples);
    spec.validate();
    return spec;
}

inline SweepSpec load_sweep_spec(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read sweep spec '" + path.string() + "'");
    return sweep_spec_from_json(json::parse(f), path.parent_path());
}

} // namespace smcts
