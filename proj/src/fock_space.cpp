#include "fwmcat/fock_space.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "fwmcat/errors.hpp"

namespace fwmcat {

namespace {

// Number of tuples per total photon number, saturating at `limit + 1`.
std::vector<std::size_t> count_by_total(const std::vector<int>& max_occ, int max_total,
                                        std::size_t limit) {
    std::vector<std::size_t> ways(static_cast<std::size_t>(max_total) + 1, 0);
    ways[0] = 1;
    for (int cap : max_occ) {
        std::vector<std::size_t> next(ways.size(), 0);
        for (std::size_t n = 0; n < ways.size(); ++n) {
            if (ways[n] == 0) continue;
            for (int k = 0; k <= cap && n + k < ways.size(); ++k) {
                next[n + k] = std::min(limit + 1, next[n + k] + ways[n]);
            }
        }
        ways = std::move(next);
    }
    return ways;
}

void enumerate_sector(const std::vector<int>& max_occ, std::size_t mode, int remaining,
                      std::vector<int>& current, std::vector<int>& out) {
    if (mode + 1 == max_occ.size()) {
        if (remaining <= max_occ[mode]) {
            current[mode] = remaining;
            out.insert(out.end(), current.begin(), current.end());
        }
        return;
    }
    // Capacity of the modes after this one bounds how small n_mode may be.
    int tail = 0;
    for (std::size_t j = mode + 1; j < max_occ.size(); ++j) tail += max_occ[j];
    const int lo = std::max(0, remaining - tail);
    const int hi = std::min(max_occ[mode], remaining);
    for (int n = lo; n <= hi; ++n) {
        current[mode] = n;
        enumerate_sector(max_occ, mode + 1, remaining - n, current, out);
    }
}

}  // namespace

FockSpace::FockSpace(std::vector<int> max_occ, std::optional<int> total_cap,
                     std::size_t dimension_limit)
    : max_occ_(std::move(max_occ)), total_cap_(total_cap) {
    if (max_occ_.empty()) throw ConfigError("FockSpace: mode_count must be >= 1");
    for (int m : max_occ_) {
        if (m < 0) throw ConfigError("FockSpace: max_occ entries must be >= 0");
    }
    if (total_cap_ && *total_cap_ < 0) throw ConfigError("FockSpace: total_cap must be >= 0");

    // Mixed-radix codes must fit in 64 bits.
    long double product = 1;
    for (int m : max_occ_) product *= static_cast<long double>(m) + 1;
    if (product > static_cast<long double>(std::numeric_limits<std::uint64_t>::max())) {
        throw ConfigError("FockSpace: product of local dimensions overflows 64-bit index codes");
    }

    const int sum_caps = std::accumulate(max_occ_.begin(), max_occ_.end(), 0);
    const int max_total = total_cap_ ? std::min(*total_cap_, sum_caps) : sum_caps;

    const auto ways = count_by_total(max_occ_, max_total, dimension_limit);
    std::size_t dim = 0;
    for (auto w : ways) dim = std::min(dimension_limit + 1, dim + w);
    if (dim > dimension_limit) {
        throw ConfigError("FockSpace: dimension exceeds limit of " + std::to_string(dimension_limit) +
                          " basis states; lower max_occ or total_cap");
    }
    dimension_ = dim;

    occupations_.reserve(dimension_ * mode_count());
    sector_offsets_.assign(static_cast<std::size_t>(max_total) + 2, 0);
    std::vector<int> current(mode_count(), 0);
    for (int n = 0; n <= max_total; ++n) {
        sector_offsets_[n] = occupations_.size() / mode_count();
        enumerate_sector(max_occ_, 0, n, current, occupations_);
    }
    sector_offsets_.back() = dimension_;

    codes_.resize(dimension_);
    for (std::size_t i = 0; i < dimension_; ++i) codes_[i] = code_of(occupation(i));
}

std::uint64_t FockSpace::code_of(std::span<const int> occ) const {
    std::uint64_t code = 0;
    for (std::size_t j = 0; j < occ.size(); ++j) {
        code = code * (static_cast<std::uint64_t>(max_occ_[j]) + 1) + static_cast<std::uint64_t>(occ[j]);
    }
    return code;
}

int FockSpace::total_number(std::size_t index) const {
    const auto occ = occupation(index);
    return std::accumulate(occ.begin(), occ.end(), 0);
}

std::optional<std::size_t> FockSpace::index_of(std::span<const int> occ) const {
    if (occ.size() != mode_count()) return std::nullopt;
    int total = 0;
    for (std::size_t j = 0; j < occ.size(); ++j) {
        if (occ[j] < 0 || occ[j] > max_occ_[j]) return std::nullopt;
        total += occ[j];
    }
    if (total > max_total()) return std::nullopt;
    const auto [begin, end] = sector(total);
    const auto code = code_of(occ);
    const auto first = codes_.begin() + static_cast<std::ptrdiff_t>(begin);
    const auto last = codes_.begin() + static_cast<std::ptrdiff_t>(end);
    const auto it = std::lower_bound(first, last, code);
    if (it == last || *it != code) return std::nullopt;
    return static_cast<std::size_t>(it - codes_.begin());
}

std::pair<std::size_t, std::size_t> FockSpace::sector(int total) const {
    if (total < 0 || total > max_total()) return {dimension_, dimension_};
    return {sector_offsets_[total], sector_offsets_[total + 1]};
}

FockSpacePtr build_space(std::vector<int> max_occ, std::optional<int> total_cap,
                         std::size_t dimension_limit) {
    return std::make_shared<const FockSpace>(std::move(max_occ), total_cap, dimension_limit);
}

}  // namespace fwmcat
