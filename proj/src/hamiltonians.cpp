#include "fwmcat/hamiltonians.hpp"

#include <cmath>
#include <string>

#include "fwmcat/errors.hpp"

namespace fwmcat {

namespace {

void require_three_modes(const FockSpace& space, const char* what) {
    if (space.mode_count() != 3) {
        throw ConfigError(std::string(what) + ": requires a three-mode space");
    }
}

void require_mode(const FockSpace& space, std::size_t mode) {
    if (mode >= space.mode_count()) {
        throw ConfigError("invalid mode index " + std::to_string(mode) + " for a " +
                          std::to_string(space.mode_count()) + "-mode space");
    }
}

bool close_rel(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) <= 1e-12 * scale || (a == 0.0 && b == 0.0);
}

// Relations are linear, so compare against the overall coupling scale.
bool close_scaled(double a, double b, double scale) {
    return std::abs(a - b) <= 1e-12 * std::max(scale, 1e-300) || a == b;
}

template <class F>
SparseOperator diagonal_from(const FockSpace& space, F&& f) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(space.dimension()));
    for (std::size_t i = 0; i < space.dimension(); ++i) d[static_cast<Eigen::Index>(i)] = f(space.occupation(i));
    return SparseOperator::diagonal(d);
}

}  // namespace

CouplingSet CouplingSet::decoupled(double g, double gamma) {
    CouplingSet c;
    c.g = g;
    c.g1 = c.g2 = c.g3 = g / 2;
    c.g12 = c.g13 = c.g23 = g;
    c.gamma1 = c.gamma2 = c.gamma3 = gamma;
    return c;
}

void CouplingSet::validate() const {
    if (!(g >= 0)) throw ConfigError("couplings: g must be >= 0");
    if (!(gamma1 >= 0 && gamma2 >= 0 && gamma3 >= 0)) throw ConfigError("couplings: gamma_j must be >= 0");
    for (double v : {g1, g2, g3, g12, g13, g23}) {
        if (!std::isfinite(v)) throw ConfigError("couplings: non-finite coupling");
    }
}

std::array<std::array<double, 3>, 3> frequency_shift_matrix(const CouplingSet& c) {
    return {{{2 * c.g1, c.g12, c.g13}, {c.g12, 2 * c.g2, c.g23}, {c.g13, c.g23, 2 * c.g3}}};
}

const char* to_string(Decoupling d) {
    switch (d) {
        case Decoupling::exact: return "exact";
        case Decoupling::relations_only: return "relations_only";
        case Decoupling::none: return "none";
    }
    return "none";
}

Decoupling validate_decoupling(const CouplingSet& c) {
    const double scale = std::max({std::abs(c.g), std::abs(c.g1), std::abs(c.g2), std::abs(c.g3), std::abs(c.g12),
                                   std::abs(c.g13), std::abs(c.g23)});
    const bool relations = close_scaled(2 * c.g1 + c.g12, 2 * c.g13, scale) &&
                           close_scaled(2 * c.g2 + c.g12, 2 * c.g23, scale) &&
                           close_scaled(c.g13 + c.g23, 4 * c.g3, scale);
    const bool individual = close_rel(c.g1, c.g / 2) && close_rel(c.g2, c.g / 2) && close_rel(c.g3, c.g / 2) &&
                            close_rel(c.g12, c.g) && close_rel(c.g13, c.g) && close_rel(c.g23, c.g);
    if (relations && individual) return Decoupling::exact;
    if (relations) return Decoupling::relations_only;
    return Decoupling::none;
}

SparseOperator annihilation_op(const FockSpace& space, std::size_t mode) {
    require_mode(space, mode);
    std::vector<Triplet> entries;
    entries.reserve(space.dimension());
    std::vector<int> occ(space.mode_count());
    for (std::size_t i = 0; i < space.dimension(); ++i) {
        const auto src = space.occupation(i);
        if (src[mode] == 0) continue;
        occ.assign(src.begin(), src.end());
        occ[mode] -= 1;
        if (auto j = space.index_of(occ)) entries.push_back({*j, i, std::sqrt(static_cast<double>(src[mode]))});
    }
    return SparseOperator(space.dimension(), entries, false);
}

SparseOperator creation_op(const FockSpace& space, std::size_t mode) { return annihilation_op(space, mode).adjoint(); }

SparseOperator number_op(const FockSpace& space, std::size_t mode) {
    require_mode(space, mode);
    return diagonal_from(space, [mode](std::span<const int> occ) { return static_cast<double>(occ[mode]); });
}

SparseOperator total_number_op(const FockSpace& space) {
    return diagonal_from(space, [](std::span<const int> occ) {
        double n = 0;
        for (int k : occ) n += k;
        return n;
    });
}

SparseOperator build_h_fwm(const FockSpace& space, double g) {
    require_three_modes(space, "build_h_fwm");
    if (!(g >= 0)) throw ConfigError("build_h_fwm: g must be >= 0");
    std::vector<Triplet> entries;
    std::vector<int> target(3);
    for (std::size_t i = 0; i < space.dimension(); ++i) {
        const auto occ = space.occupation(i);
        const int n1 = occ[0], n2 = occ[1], n3 = occ[2];
        if (n1 == 0 || n2 == 0) continue;
        target = {n1 - 1, n2 - 1, n3 + 2};
        const auto j = space.index_of(target);
        if (!j) continue;
        const double amp = g * std::sqrt(static_cast<double>(n1) * n2 * (n3 + 1.0) * (n3 + 2.0));
        entries.push_back({*j, i, amp});
        entries.push_back({i, *j, amp});
    }
    return SparseOperator(space.dimension(), entries, true);
}

SparseOperator build_h_spm(const FockSpace& space, double g1, double g2, double g3) {
    require_three_modes(space, "build_h_spm");
    const std::array<double, 3> gs{g1, g2, g3};
    return diagonal_from(space, [&](std::span<const int> occ) {
        double e = 0;
        for (std::size_t j = 0; j < 3; ++j) e += gs[j] * occ[j] * (occ[j] - 1.0);
        return e;
    });
}

SparseOperator build_h_xpm(const FockSpace& space, double g12, double g13, double g23) {
    require_three_modes(space, "build_h_xpm");
    return diagonal_from(space, [&](std::span<const int> occ) {
        return g12 * occ[0] * occ[1] + g13 * static_cast<double>(occ[0]) * occ[2] +
               g23 * static_cast<double>(occ[1]) * occ[2];
    });
}

SparseOperator build_h_int1(const FockSpace& space, const CouplingSet& c) {
    c.validate();
    return build_h_fwm(space, c.g) + build_h_spm(space, c.g1, c.g2, c.g3) + build_h_xpm(space, c.g12, c.g13, c.g23);
}

SparseOperator build_h_int2(const FockSpace& space, double g) { return build_h_fwm(space, g); }

SparseOperator build_omega_op(const FockSpace& space, const CouplingSet& c, std::size_t i) {
    require_three_modes(space, "build_omega_op");
    if (i >= 3) throw ConfigError("build_omega_op: index must be 0, 1 or 2");
    const auto m = frequency_shift_matrix(c);
    return diagonal_from(space, [&](std::span<const int> occ) {
        return m[i][0] * occ[0] + m[i][1] * occ[1] + m[i][2] * occ[2];
    });
}

std::vector<SparseOperator> collapse_ops(const FockSpace& space, const CouplingSet& c) {
    c.validate();
    std::vector<SparseOperator> out;
    const auto gammas = c.gammas();
    for (std::size_t j = 0; j < std::min<std::size_t>(3, space.mode_count()); ++j) {
        if (gammas[j] > 0) out.push_back(std::sqrt(gammas[j]) * annihilation_op(space, j));
    }
    return out;
}

}  // namespace fwmcat
