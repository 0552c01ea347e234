#pragma once

#include <string>
#include <vector>

#include "fwmcat/sparse_operator.hpp"

namespace fwmcat {

struct GridSpec {
    double x_min = -8, x_max = 8;
    std::size_t x_count = 201;
    double p_min = -8, p_max = 8;
    std::size_t p_count = 201;

    double dx() const { return (x_max - x_min) / static_cast<double>(x_count - 1); }
    double dp() const { return (p_max - p_min) / static_cast<double>(p_count - 1); }
    double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx(); }
    double p(std::size_t j) const { return p_min + static_cast<double>(j) * dp(); }
    void validate() const;
};

/// Parses "xmin,xmax,nx,pmin,pmax,np".
GridSpec parse_grid_spec(const std::string& text);

struct WignerGrid {
    GridSpec spec;
    Eigen::MatrixXd values;   // values(i, j) = W(x_i, p_j)
    std::string label;
    double normalization = 0;  // Riemann sum of W dx dp
    std::string warning;       // non-empty when the window clips the state
};

inline constexpr std::size_t kWignerMaxDim = 256;

/// W(x, p) of a single-mode density matrix at one phase-space point.
double wigner_point(const MatrixC& rho, double x, double p);

/**
 * Wigner function on a rectangular grid from the Fock-basis expansion
 * W = sum_{mn} rho_mn W_{|m><n|}(x, p). The Laguerre kernels are generated
 * by their three-term recurrence in normalized form, which stays O(1) in
 * magnitude up to dimension 256.
 */
WignerGrid wigner(const MatrixC& rho, const GridSpec& spec, std::string label = {});

/// P(x_i) = sum_j W(x_i, p_j) dp
std::vector<double> marginal_x(const WignerGrid& grid);
/// P(p_j) = sum_i W(x_i, p_j) dx
std::vector<double> marginal_p(const WignerGrid& grid);

struct MarginalMoments {
    double norm = 0, mean = 0, variance = 0;
};
MarginalMoments marginal_moments(const std::vector<double>& density, double start, double step);

double wigner_min(const WignerGrid& grid);
/// sum |W| dx dp - 1
double negativity_volume(const WignerGrid& grid);

}  // namespace fwmcat
