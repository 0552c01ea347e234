#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fwmcat/states.hpp"
#include "fwmcat/wigner.hpp"

namespace fwmcat {

/// printf("%.9g"); the fixed text precision of every emitted number.
std::string format_g9(double v);

/// Git-blob style SHA-1 of a text ("blob <len>\0" + text), lowercase hex.
std::string content_hash(const std::string& text);

struct StateMeta {
    double tau = 0.0;
    std::string config_hash;
    /// "raw" (phase-rotated ladder basis) or "transformed" (number phase applied)
    std::string picture = "raw";
};

/**
 * State hand-off file. JSON document with
 *   format: "fwmcat-state", kind: "pure" | "density",
 *   space: {max_occ, total_cap}   (full-system states only)
 *   modes, dims                   (reduced density matrices only)
 *   amplitudes: [[index, re, im], ...]  or  entries: [[row, col, re, im], ...]
 * plus tau, config_hash and picture.
 */
struct StateFile {
    StateMeta meta;
    std::optional<PureState> pure;
    std::optional<DensityMatrix> density;
};

void write_state(const std::filesystem::path& path, const PureState& psi, const StateMeta& meta);
void write_state(const std::filesystem::path& path, const DensityMatrix& rho, const StateMeta& meta);
StateFile read_state(const std::filesystem::path& path);

/// Single-mode density matrix of `mode` (0-based) from any state file.
DensityMatrix single_mode_from(const StateFile& file, std::size_t mode);

/// `#`-prefixed header lines followed by `# x p w` and one row per grid point (x outer, p inner).
std::string format_wigner_grid(const WignerGrid& grid, const std::vector<std::string>& header = {});
void write_wigner_grid(const std::filesystem::path& path, const WignerGrid& grid,
                       const std::vector<std::string>& header = {});

/// Writes `text` to `path`, creating parent directories; ConfigError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace fwmcat
