#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "smcts/network.hpp"

namespace smcts {

/// Raised when a required CSV column is absent from the header.
struct CsvSchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// CSV reading (RFC 4180: quoted fields, doubled quotes, embedded newlines)

/// Reads one CSV record into `fields`. Returns false at end of input.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int ch;
    while ((ch = in.get()) != std::istream::traits_type::eof()) {
        any = true;
        const char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get();
            break;
        } else {
            field.push_back(c);
        }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

// ---------------------------------------------------------------------------
// Transaction aggregation

/// One row of the transaction export.
struct TransactionRow {
    std::string date;
    StoreId store_id = 0;
    std::string store_name;
    std::string city;
    std::string county;
    std::string zip;
    std::optional<double> latitude;
    std::optional<double> longitude;
    double sale_amount = 0.0;
};

/// Maps the logical column names (date, store_id, store_name, city, county,
/// zip, latitude, longitude, sale_amount) to the actual headers of the file
/// at hand. Unmapped columns default to their logical names.
using ColumnMap = std::unordered_map<std::string, std::string>;

inline const std::vector<std::string>& logical_columns() {
    static const std::vector<std::string> cols = {
        "date", "store_id", "store_name", "city",     "county",
        "zip",  "latitude", "longitude",  "sale_amount"};
    return cols;
}

struct IngestReport {
    StoreNetwork network{std::vector<StoreRecord>{}};
    std::size_t rows_total = 0;   // data rows seen
    std::size_t rows_used = 0;    // aggregated into a store
    std::size_t rows_skipped = 0; // unparseable, warned
    std::size_t stores_dropped_missing_coords = 0;
    std::size_t coordinate_conflicts = 0;
    double total_sales_included = 0.0; // sum of amounts behind network stores
    double total_sales_dropped = 0.0;  // amounts of coordinate-less stores
    std::vector<std::string> warnings;
};

namespace detail {

inline bool parse_double(std::string_view s, double& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    if (s.empty()) return false;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end;
}

inline bool parse_store_id(std::string_view s, StoreId& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    if (s.empty()) return false;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end;
}

// Accepts YYYY-MM-DD and M/D/YYYY with plausible field ranges.
inline bool parse_date(std::string_view s) {
    int y = 0, m = 0, d = 0;
    char buf[32];
    if (s.size() >= sizeof buf) return false;
    std::copy(s.begin(), s.end(), buf);
    buf[s.size()] = '\0';
    if (std::sscanf(buf, "%d-%d-%d", &y, &m, &d) != 3 &&
        std::sscanf(buf, "%d/%d/%d", &m, &d, &y) != 3)
        return false;
    return y >= 1900 && y <= 2200 && m >= 1 && m <= 12 && d >= 1 && d <= 31;
}

inline std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

} // namespace detail

/// Streams a transaction CSV and aggregates it into a store network:
/// per-store base sales are the sum of that store's sale amounts, and the
/// coordinates are the first non-empty pair seen for the store. Stores that
/// never report coordinates are dropped with a warning; rows that fail to
/// parse are skipped with a warning.
inline IngestReport aggregate_transactions(std::istream& csv, const ColumnMap& column_map = {},
                                           double radius_miles = 0.5,
                                           double recapture_gamma = 0.5) {
    std::vector<std::string> header;
    if (!read_csv_record(csv, header))
        throw CsvSchemaError("empty input: no header row");

    // Resolve logical -> physical column positions.
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) position[header[i]] = i;
    std::unordered_map<std::string, std::size_t> col;
    for (const auto& logical : logical_columns()) {
        auto mapped = column_map.count(logical) ? column_map.at(logical) : logical;
        auto it = position.find(mapped);
        if (it == position.end())
            throw CsvSchemaError("missing required column '" + mapped + "'");
        col[logical] = it->second;
    }

    const std::size_t c_date = col["date"], c_store = col["store_id"],
                      c_name = col["store_name"], c_city = col["city"],
                      c_county = col["county"], c_zip = col["zip"],
                      c_lat = col["latitude"], c_lon = col["longitude"],
                      c_amount = col["sale_amount"];

    struct Agg {
        StoreRecord record;
        bool has_coords = false;
        double amount = 0.0;
    };
    std::vector<Agg> aggs;                            // first-occurrence order
    std::unordered_map<StoreId, std::size_t> by_id;

    IngestReport report;
    std::vector<std::string> fields;
    std::size_t line = 1;
    while (read_csv_record(csv, fields)) {
        ++line;
        if (fields.size() == 1 && fields[0].empty()) continue; // blank line
        ++report.rows_total;

        auto warn_skip = [&](const std::string& why) {
            ++report.rows_skipped;
            report.warnings.push_back("line " + std::to_string(line) + ": skipped (" + why +
                                      ")");
        };
        if (fields.size() != header.size()) {
            warn_skip("expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
            continue;
        }

        TransactionRow row;
        if (!detail::parse_store_id(fields[c_store], row.store_id)) {
            warn_skip("bad store_id '" + fields[c_store] + "'");
            continue;
        }
        row.date = fields[c_date];
        if (!detail::parse_date(row.date)) {
            warn_skip("bad date '" + row.date + "'");
            continue;
        }
        if (!detail::parse_double(fields[c_amount], row.sale_amount) ||
            row.sale_amount < 0.0) {
            warn_skip("bad sale_amount '" + fields[c_amount] + "'");
            continue;
        }
        const std::string& lat_text = fields[c_lat];
        const std::string& lon_text = fields[c_lon];
        if (!lat_text.empty() || !lon_text.empty()) {
            double lat = 0.0, lon = 0.0;
            if (!detail::parse_double(lat_text, lat) || !detail::parse_double(lon_text, lon) ||
                lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 180.0) {
                warn_skip("bad coordinates '" + lat_text + "','" + lon_text + "'");
                continue;
            }
            row.latitude = lat;
            row.longitude = lon;
        }
        row.store_name = fields[c_name];
        row.city = fields[c_city];
        row.county = fields[c_county];
        row.zip = fields[c_zip];

        auto [it, inserted] = by_id.emplace(row.store_id, aggs.size());
        if (inserted) {
            Agg agg;
            agg.record.store_id = row.store_id;
            agg.record.name = row.store_name;
            agg.record.city = row.city;
            agg.record.county = row.county;
            agg.record.zip = row.zip;
            aggs.push_back(std::move(agg));
        }
        Agg& agg = aggs[it->second];
        agg.amount += row.sale_amount;
        ++report.rows_used;
        if (row.latitude) {
            if (!agg.has_coords) {
                agg.record.latitude = *row.latitude;
                agg.record.longitude = *row.longitude;
                agg.has_coords = true;
            } else if (agg.record.latitude != *row.latitude ||
                       agg.record.longitude != *row.longitude) {
                ++report.coordinate_conflicts;
                report.warnings.push_back(
                    "line " + std::to_string(line) + ": store " +
                    std::to_string(row.store_id) +
                    " reports conflicting coordinates; keeping the first");
            }
        }
        // Fill in metadata the first occurrence left blank.
        if (agg.record.name.empty()) agg.record.name = row.store_name;
        if (agg.record.city.empty()) agg.record.city = row.city;
        if (agg.record.county.empty()) agg.record.county = row.county;
        if (agg.record.zip.empty()) agg.record.zip = row.zip;
    }

    std::vector<StoreRecord> stores;
    stores.reserve(aggs.size());
    for (auto& agg : aggs) {
        if (!agg.has_coords) {
            ++report.stores_dropped_missing_coords;
            report.total_sales_dropped += agg.amount;
            report.warnings.push_back("store " + std::to_string(agg.record.store_id) +
                                      ": no coordinates in any row; dropped");
            continue;
        }
        agg.record.base_sales = agg.amount;
        report.total_sales_included += agg.amount;
        stores.push_back(std::move(agg.record));
    }
    report.network = StoreNetwork(std::move(stores), radius_miles, recapture_gamma);
    return report;
}

/// Sub-network of the stores whose county matches (ASCII case-insensitive).
/// The neighbor index is rebuilt for the subset.
inline StoreNetwork filter_county(const StoreNetwork& network, std::string_view county) {
    const std::string want = detail::lower_ascii(county);
    std::vector<StoreRecord> stores;
    for (const auto& s : network.stores())
        if (detail::lower_ascii(s.county) == want) stores.push_back(s);
    if (stores.empty())
        throw std::runtime_error("no stores in county '" + std::string(county) + "'");
    return StoreNetwork(std::move(stores), network.radius_miles(),
                        network.recapture_gamma());
}

// ---------------------------------------------------------------------------
// Synthetic instances

struct BoundingBox {
    double min_lat = 41.50;
    double min_lon = -93.75;
    double max_lat = 41.75;
    double max_lon = -93.45;

    void validate() const {
        if (!(min_lat < max_lat) || !(min_lon < max_lon) || min_lat < -90.0 ||
            max_lat > 90.0 || min_lon < -180.0 || max_lon > 180.0)
            throw std::invalid_argument("invalid bounding box");
    }
};

/// Seeded generator parameters: stores are scattered around uniformly placed
/// cluster centers so the 0.5-mile neighbor structure is nontrivial, with
/// lognormal annual sales.
struct SyntheticSpec {
    std::size_t n_stores = 30;
    std::uint64_t seed = 42;
    BoundingBox area;
    std::size_t cluster_count = 4;
    double sales_mu = 11.5;    // log-space mean of annual sales
    double sales_sigma = 0.8;  // log-space standard deviation
    double scatter_miles = 0.3;
    double radius_miles = 0.5;
    double recapture_gamma = 0.5;

    void validate() const {
        if (n_stores < 2) throw std::invalid_argument("n_stores must be >= 2");
        if (cluster_count < 1) throw std::invalid_argument("cluster_count must be >= 1");
        if (!(sales_sigma >= 0.0)) throw std::invalid_argument("sales_sigma must be >= 0");
        if (!(scatter_miles > 0.0)) throw std::invalid_argument("scatter_miles must be > 0");
        area.validate();
    }
};

inline StoreNetwork generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> lat_dist(spec.area.min_lat, spec.area.max_lat);
    std::uniform_real_distribution<double> lon_dist(spec.area.min_lon, spec.area.max_lon);

    std::vector<std::pair<double, double>> centers;
    centers.reserve(spec.cluster_count);
    for (std::size_t c = 0; c < spec.cluster_count; ++c) {
        const double lat = lat_dist(rng);
        const double lon = lon_dist(rng);
        centers.emplace_back(lat, lon);
    }

    std::uniform_int_distribution<std::size_t> cluster_dist(0, spec.cluster_count - 1);
    std::normal_distribution<double> scatter(0.0, 1.0);
    std::lognormal_distribution<double> sales(spec.sales_mu, spec.sales_sigma);

    std::vector<StoreRecord> stores;
    stores.reserve(spec.n_stores);
    for (std::size_t i = 0; i < spec.n_stores; ++i) {
        const auto& [clat, clon] = centers[cluster_dist(rng)];
        const double sigma_lat_deg = spec.scatter_miles / kMilesPerDegree;
        const double sigma_lon_deg =
            spec.scatter_miles / (kMilesPerDegree * std::cos(degrees_to_radians(clat)));
        StoreRecord s;
        s.store_id = static_cast<StoreId>(i + 1);
        s.name = "Store " + std::to_string(i + 1);
        s.latitude = std::clamp(clat + scatter(rng) * sigma_lat_deg, -90.0, 90.0);
        s.longitude = std::clamp(clon + scatter(rng) * sigma_lon_deg, -180.0, 180.0);
        s.county = "SYNTHETIC";
        s.city = "Synthetic";
        s.zip = "00000";
        s.base_sales = sales(rng);
        stores.push_back(std::move(s));
    }
    return StoreNetwork(std::move(stores), spec.radius_miles, spec.recapture_gamma);
}

} // namespace smcts
