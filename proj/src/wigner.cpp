#include "fwmcat/wigner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include "fwmcat/errors.hpp"

namespace fwmcat {

void GridSpec::validate() const {
    if (x_count < 2 || p_count < 2) throw ConfigError("grid: need at least 2 points per axis");
    if (!(x_max > x_min) || !(p_max > p_min)) throw ConfigError("grid: max must exceed min");
}

GridSpec parse_grid_spec(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("grid: cannot parse '" + item + "'");
        }
    }
    if (v.size() != 6) throw ConfigError("grid: expected xmin,xmax,nx,pmin,pmax,np");
    if (v[2] != std::floor(v[2]) || v[5] != std::floor(v[5]) || v[2] < 2 || v[5] < 2) {
        throw ConfigError("grid: point counts must be integers >= 2");
    }
    GridSpec g{v[0], v[1], static_cast<std::size_t>(v[2]), v[3], v[4], static_cast<std::size_t>(v[5])};
    g.validate();
    return g;
}

namespace {

// Per-point evaluation with a caller-provided scratch buffer.
double wigner_point_impl(const MatrixC& rho, double x, double p, std::vector<cplx>& w) {
    const Eigen::Index d = rho.rows();
    const cplx a{x / std::numbers::sqrt2, p / std::numbers::sqrt2};
    const cplx two_a = 2.0 * a, two_ac = std::conj(two_a);
    w.assign(static_cast<std::size_t>(d), cplx{});

    w[0] = std::exp(-(x * x + p * p)) / std::numbers::pi;
    double total = rho(0, 0).real() * w[0].real();
    for (Eigen::Index n = 1; n < d; ++n) {
        w[n] = two_a * w[n - 1] / std::sqrt(static_cast<double>(n));
        total += 2.0 * (rho(0, n) * w[n]).real();
    }
    for (Eigen::Index m = 1; m < d; ++m) {
        const double sm = std::sqrt(static_cast<double>(m));
        cplx temp = w[m];
        w[m] = (two_ac * temp - sm * w[m - 1]) / sm;
        total += (rho(m, m) * w[m]).real();
        for (Eigen::Index n = m + 1; n < d; ++n) {
            const cplx next = (two_a * w[n - 1] - sm * temp) / std::sqrt(static_cast<double>(n));
            temp = w[n];
            w[n] = next;
            total += 2.0 * (rho(m, n) * w[n]).real();
        }
    }
    return total;
}

void check_single_mode(const MatrixC& rho) {
    if (rho.rows() != rho.cols() || rho.rows() == 0) throw ConfigError("wigner: expected a square single-mode matrix");
    if (static_cast<std::size_t>(rho.rows()) > kWignerMaxDim) {
        throw ConfigError("wigner: dimension exceeds " + std::to_string(kWignerMaxDim));
    }
}

}  // namespace

double wigner_point(const MatrixC& rho, double x, double p) {
    check_single_mode(rho);
    std::vector<cplx> scratch;
    return wigner_point_impl(rho, x, p, scratch);
}

WignerGrid wigner(const MatrixC& rho, const GridSpec& spec, std::string label) {
    check_single_mode(rho);
    spec.validate();
    WignerGrid grid;
    grid.spec = spec;
    grid.label = std::move(label);
    grid.values.resize(static_cast<Eigen::Index>(spec.x_count), static_cast<Eigen::Index>(spec.p_count));

    const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                             static_cast<unsigned>(spec.x_count)));
    auto rows = [&](std::size_t first, std::size_t stride) {
        std::vector<cplx> scratch;
        for (std::size_t i = first; i < spec.x_count; i += stride) {
            for (std::size_t j = 0; j < spec.p_count; ++j) {
                grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    wigner_point_impl(rho, spec.x(i), spec.p(j), scratch);
            }
        }
    };
    if (workers == 1) {
        rows(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(rows, w, workers);
        for (auto& t : pool) t.join();
    }

    grid.normalization = grid.values.sum() * spec.dx() * spec.dp();
    if (std::abs(grid.normalization - 1.0) > 1e-2) {
        std::ostringstream msg;
        msg << "Wigner grid normalization " << grid.normalization << " deviates from 1 by more than 1e-2; "
            << "widen or refine the grid";
        grid.warning = msg.str();
    }
    return grid;
}

std::vector<double> marginal_x(const WignerGrid& grid) {
    std::vector<double> out(grid.spec.x_count);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = grid.values.row(static_cast<Eigen::Index>(i)).sum() * grid.spec.dp();
    return out;
}

std::vector<double> marginal_p(const WignerGrid& grid) {
    std::vector<double> out(grid.spec.p_count);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = grid.values.col(static_cast<Eigen::Index>(j)).sum() * grid.spec.dx();
    return out;
}

MarginalMoments marginal_moments(const std::vector<double>& density, double start, double step) {
    MarginalMoments m;
    double s1 = 0, s2 = 0;
    for (std::size_t i = 0; i < density.size(); ++i) {
        const double q = start + static_cast<double>(i) * step;
        m.norm += density[i] * step;
        s1 += q * density[i] * step;
        s2 += q * q * density[i] * step;
    }
    m.mean = s1 / m.norm;
    m.variance = s2 / m.norm - m.mean * m.mean;
    return m;
}

double wigner_min(const WignerGrid& grid) { return grid.values.minCoeff(); }

double negativity_volume(const WignerGrid& grid) {
    return grid.values.cwiseAbs().sum() * grid.spec.dx() * grid.spec.dp() - 1.0;
}

}  // namespace fwmcat
