#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace fwmcat {

inline constexpr std::size_t kDefaultDimensionLimit = 5'000'000;

/**
 * Truncated multimode occupation-number basis.
 *
 * Admissible tuples satisfy 0 <= n_j <= max_occ[j] and, when a total cap is
 * set, sum_j n_j <= total_cap. Basis states are ordered by ascending total
 * photon number and lexicographically inside each total-number sector, so
 * every sector occupies a contiguous index range.
 */
class FockSpace {
public:
    FockSpace(std::vector<int> max_occ, std::optional<int> total_cap,
              std::size_t dimension_limit = kDefaultDimensionLimit);

    std::size_t mode_count() const { return max_occ_.size(); }
    std::size_t dimension() const { return dimension_; }
    const std::vector<int>& max_occ() const { return max_occ_; }
    std::optional<int> total_cap() const { return total_cap_; }

    /// Occupation tuple of basis state `index`.
    std::span<const int> occupation(std::size_t index) const {
        return {occupations_.data() + index * mode_count(), mode_count()};
    }
    int occupation(std::size_t index, std::size_t mode) const {
        return occupations_[index * mode_count() + mode];
    }
    int total_number(std::size_t index) const;

    /// Index of an occupation tuple, or nullopt if it lies outside the truncation.
    std::optional<std::size_t> index_of(std::span<const int> occ) const;

    /// Largest total photon number that has at least one basis state.
    int max_total() const { return static_cast<int>(sector_offsets_.size()) - 2; }
    /// Half-open index range [begin, end) of the total-number sector N.
    std::pair<std::size_t, std::size_t> sector(int total) const;
    const std::vector<std::size_t>& sector_offsets() const { return sector_offsets_; }

    /// Local dimension max_occ[mode] + 1.
    std::size_t local_dim(std::size_t mode) const {
        return static_cast<std::size_t>(max_occ_[mode]) + 1;
    }

    bool operator==(const FockSpace& other) const {
        return max_occ_ == other.max_occ_ && total_cap_ == other.total_cap_;
    }

private:
    std::uint64_t code_of(std::span<const int> occ) const;

    std::vector<int> max_occ_;
    std::optional<int> total_cap_;
    std::size_t dimension_ = 0;
    std::vector<int> occupations_;           // dimension x mode_count, row-major
    std::vector<std::uint64_t> codes_;       // mixed-radix code per index
    std::vector<std::size_t> sector_offsets_;  // size max_total + 2
};

using FockSpacePtr = std::shared_ptr<const FockSpace>;

/// Builds a shared, immutable space.
FockSpacePtr build_space(std::vector<int> max_occ, std::optional<int> total_cap = std::nullopt,
                         std::size_t dimension_limit = kDefaultDimensionLimit);

}  // namespace fwmcat
