#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace smcts {

using StoreId = std::int64_t;

/// One retail store: identity, location and annual base sales.
struct StoreRecord {
    StoreId store_id = 0;
    std::string name;
    double latitude = 0.0;
    double longitude = 0.0;
    std::string county;
    std::string city;
    std::string zip;
    double base_sales = 0.0; // currency per year, >= 0

    void validate() const {
        if (latitude < -90.0 || latitude > 90.0)
            throw std::invalid_argument("store " + std::to_string(store_id) +
                                        ": latitude out of [-90, 90]");
        if (longitude < -180.0 || longitude > 180.0)
            throw std::invalid_argument("store " + std::to_string(store_id) +
                                        ": longitude out of [-180, 180]");
        if (!(base_sales >= 0.0))
            throw std::invalid_argument("store " + std::to_string(store_id) +
                                        ": base_sales must be non-negative");
    }
};

/// Set of closed store ids. The complement of the closed set is the set of
/// stores that remain open. Stored sorted for deterministic iteration.
class ClosureState {
public:
    ClosureState() = default;

    explicit ClosureState(std::vector<StoreId> ids) : closed_(std::move(ids)) {
        std::sort(closed_.begin(), closed_.end());
        closed_.erase(std::unique(closed_.begin(), closed_.end()), closed_.end());
    }

    bool is_closed(StoreId id) const {
        return std::binary_search(closed_.begin(), closed_.end(), id);
    }

    const std::vector<StoreId>& closed() const { return closed_; }

    std::size_t count() const { return closed_.size(); }
    bool empty() const { return closed_.empty(); }

    /// Copy of this state with one more store closed.
    ClosureState with_closed(StoreId id) const {
        std::vector<StoreId> ids = closed_;
        ids.push_back(id);
        return ClosureState(std::move(ids));
    }

    bool operator==(const ClosureState&) const = default;

private:
    std::vector<StoreId> closed_; // sorted, unique
};

} // namespace smcts
