#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "smcts/geo.hpp"
#include "smcts/store.hpp"

namespace smcts {

// Inverse-distance weights use w = 1 / (d + epsilon) so coincident
// coordinates stay finite.
inline constexpr double kDistanceEpsilonMiles = 0.01;

/// Immutable store network: the stores, a precomputed proximity index
/// (all pairs within radius_miles of each other), and the parameters of
/// the sales-recapture model.
///
/// When a store closes, a fraction recapture_gamma of its base sales is
/// redistributed to its open neighbors, split by inverse distance; the rest
/// of its sales leave the network. A closed store with no open neighbor
/// loses everything.
///
/// Safe for concurrent reads after construction.
class StoreNetwork {
public:
    explicit StoreNetwork(std::vector<StoreRecord> stores,
                          double radius_miles = 0.5,
                          double recapture_gamma = 0.5)
        : stores_(std::move(stores)),
          radius_miles_(radius_miles),
          recapture_gamma_(recapture_gamma) {
        if (!(radius_miles_ > 0.0))
            throw std::invalid_argument("radius_miles must be > 0");
        if (!(recapture_gamma_ >= 0.0 && recapture_gamma_ <= 1.0))
            throw std::invalid_argument("recapture_gamma must be in [0, 1]");
        index_.reserve(stores_.size());
        for (std::size_t i = 0; i < stores_.size(); ++i) {
            stores_[i].validate();
            if (!index_.emplace(stores_[i].store_id, i).second)
                throw std::invalid_argument("duplicate store_id " +
                                            std::to_string(stores_[i].store_id));
        }
        build_neighbor_index();
    }

    std::size_t size() const { return stores_.size(); }
    double radius_miles() const { return radius_miles_; }
    double recapture_gamma() const { return recapture_gamma_; }
    const std::vector<StoreRecord>& stores() const { return stores_; }

    bool contains(StoreId id) const { return index_.count(id) != 0; }

    const StoreRecord& store(StoreId id) const { return stores_[index_of(id)]; }

    double total_base_sales() const {
        double total = 0.0;
        for (const auto& s : stores_) total += s.base_sales;
        return total;
    }

    double mean_neighbor_degree() const {
        if (stores_.empty()) return 0.0;
        std::size_t edges2 = 0;
        for (const auto& nb : neighbors_) edges2 += nb.size();
        return static_cast<double>(edges2) / static_cast<double>(stores_.size());
    }

    /// Ids of all stores strictly other than `id` within radius_miles.
    /// Sorted ascending by id.
    std::vector<StoreId> neighbors_within(StoreId id) const {
        const auto& nb = neighbors_[index_of(id)];
        std::vector<StoreId> out;
        out.reserve(nb.size());
        for (const auto& n : nb) out.push_back(stores_[n.idx].store_id);
        return out;
    }

    /// Annual sales of an open store under the given closure state:
    /// its own base sales plus its share of recaptured demand from closed
    /// neighbors.
    double store_sales(const ClosureState& state, StoreId id) const {
        validate_state(state);
        const std::size_t j = index_of(id);
        if (state.is_closed(id))
            throw std::invalid_argument("store_sales: store " + std::to_string(id) +
                                        " is closed in this state");
        double sales = stores_[j].base_sales;
        for (const auto& n : neighbors_[j]) {
            const StoreRecord& k = stores_[n.idx];
            if (!state.is_closed(k.store_id)) continue;
            // Store j receives its inverse-distance share of the recaptured
            // fraction of closed neighbor k's sales.
            const double denom = open_weight_sum(n.idx, state);
            if (denom <= 0.0) continue; // k has no open neighbor at all
            const double w_jk = 1.0 / (n.dist_miles + kDistanceEpsilonMiles);
            sales += recapture_gamma_ * k.base_sales * w_jk / denom;
        }
        return sales;
    }

    /// Total network sales lost by closing the given set, relative to the
    /// all-open network. Closed form: each closed store loses its base sales
    /// except for the recaptured fraction, which is retained whenever at
    /// least one neighbor remains open.
    double total_loss(const ClosureState& state) const {
        validate_state(state);
        double loss = 0.0;
        for (StoreId id : state.closed()) {
            const std::size_t k = index_of(id);
            bool has_open_neighbor = false;
            for (const auto& n : neighbors_[k]) {
                if (!state.is_closed(stores_[n.idx].store_id)) {
                    has_open_neighbor = true;
                    break;
                }
            }
            const double b = stores_[k].base_sales;
            loss += has_open_neighbor ? b * (1.0 - recapture_gamma_) : b;
        }
        return loss;
    }

private:
    struct Neighbor {
        std::size_t idx;
        double dist_miles;
    };

    std::size_t index_of(StoreId id) const {
        auto it = index_.find(id);
        if (it == index_.end())
            throw std::out_of_range("unknown store_id " + std::to_string(id));
        return it->second;
    }

    void validate_state(const ClosureState& state) const {
        for (StoreId id : state.closed()) (void)index_of(id);
    }

    // Sum of inverse-distance weights from store k to its open neighbors.
    double open_weight_sum(std::size_t k, const ClosureState& state) const {
        double sum = 0.0;
        for (const auto& n : neighbors_[k]) {
            if (state.is_closed(stores_[n.idx].store_id)) continue;
            sum += 1.0 / (n.dist_miles + kDistanceEpsilonMiles);
        }
        return sum;
    }

    // O(N^2) pairwise build; acceptable for networks up to a few thousand
    // stores. The relation is symmetric and irreflexive by construction.
    void build_neighbor_index() {
        neighbors_.assign(stores_.size(), {});
        for (std::size_t i = 0; i < stores_.size(); ++i) {
            for (std::size_t j = i + 1; j < stores_.size(); ++j) {
                const double d = haversine_miles(
                    stores_[i].latitude, stores_[i].longitude,
                    stores_[j].latitude, stores_[j].longitude);
                if (d <= radius_miles_) {
                    neighbors_[i].push_back({j, d});
                    neighbors_[j].push_back({i, d});
                }
            }
        }
        // Deterministic order: ascending neighbor id.
        for (auto& nb : neighbors_) {
            std::sort(nb.begin(), nb.end(), [this](const Neighbor& a, const Neighbor& b) {
                return stores_[a.idx].store_id < stores_[b.idx].store_id;
            });
        }
    }

    std::vector<StoreRecord> stores_;
    std::unordered_map<StoreId, std::size_t> index_;
    std::vector<std::vector<Neighbor>> neighbors_;
    double radius_miles_;
    double recapture_gamma_;
};

} // namespace smcts
