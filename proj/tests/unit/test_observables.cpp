#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fwmcat/errors.hpp"
#include "fwmcat/observables.hpp"
#include "fwmcat/states.hpp"
#include "fwmcat/wigner.hpp"
#include "oracles.hpp"

using namespace fwmcat;

namespace {

MatrixC coherent_rho(cplx alpha, int cap) {
    auto s = build_space({cap});
    const auto psi = coherent_product_state(s, {alpha}, 1e-3);
    return psi.amplitudes * psi.amplitudes.adjoint();
}

MatrixC fock_rho(int n, int cap) {
    MatrixC r = MatrixC::Zero(cap + 1, cap + 1);
    r(n, n) = 1.0;
    return r;
}

}  // namespace

TEST_CASE("photon number and distribution") {
    CHECK(mean_photon(fock_rho(0, 5)) == 0.0);
    const auto rho = coherent_rho(std::polar(3.0, M_PI / 4), 45);
    CHECK(mean_photon(rho) == doctest::Approx(9.0).epsilon(1e-6));
    const auto p = photon_distribution(rho);
    CHECK(p[9] == doctest::Approx(0.13176).epsilon(1e-4));
    for (int n = 0; n < 30; ++n) CHECK(std::abs(p[n] - oracle::poisson(9.0, n)) < 1e-8);
    double total = 0;
    for (double x : p) total += x;
    CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("quadrature variances") {
    const auto coh = coherent_rho(cplx(1.3, -0.4), 40);
    auto q = quadrature_variances(coh);
    CHECK(q.var_x == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(q.var_p == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(q.mean_x == doctest::Approx(std::sqrt(2.0) * 1.3).epsilon(1e-8));
    CHECK(q.mean_p == doctest::Approx(-std::sqrt(2.0) * 0.4).epsilon(1e-8));

    // Random mixed state against dense ladder matrices.
    std::mt19937_64 rng(4);
    const auto rho = oracle::random_density(rng, 8, 3);
    const auto a = oracle::ladder(7);
    const oracle::Mat x = (a + a.adjoint()) / std::sqrt(2.0);
    const oracle::Mat p = (a - a.adjoint()) / cplx(0, std::sqrt(2.0));
    const auto expect = [&](const oracle::Mat& op) { return (rho * op).trace().real(); };
    q = quadrature_variances(rho);
    // The library evaluates b b^dag with the top level dropped; the oracle does the same.
    CHECK(q.var_x == doctest::Approx(expect(x * x) - std::pow(expect(x), 2)).epsilon(1e-12));
    CHECK(q.var_p == doctest::Approx(expect(p * p) - std::pow(expect(p), 2)).epsilon(1e-12));
    const auto m = moments(rho);
    CHECK(m.n == doctest::Approx(expect(a.adjoint() * a)));
    CHECK(m.n2 == doctest::Approx(expect(a.adjoint() * a * a.adjoint() * a)));
    CHECK(std::abs(m.b2 - (rho * a * a).trace()) < 1e-13);
}

TEST_CASE("Fano factor") {
    CHECK(fano(coherent_rho(cplx(2.0, 1.0), 40)) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(fano(fock_rho(4, 6)) == doctest::Approx(0.0));
    CHECK_THROWS_AS(fano(fock_rho(0, 6)), UndefinedError);
    MatrixC thermal = MatrixC::Zero(60, 60);
    for (int n = 0; n < 60; ++n) thermal(n, n) = std::pow(0.5, n) / 2;
    thermal /= thermal.trace();
    CHECK(fano(thermal) == doctest::Approx(2.0).epsilon(1e-6));   // 1 + n for thermal, n = 1
    CHECK(classify_fano(fano(thermal)) == PhotonStatistics::super_poissonian);
    CHECK(classify_fano(1.0) == PhotonStatistics::poissonian);
    CHECK(classify_fano(0.3) == PhotonStatistics::sub_poissonian);
    const auto st = mode_statistics(fock_rho(0, 3));
    CHECK_FALSE(st.fano.has_value());
}

TEST_CASE("Schmidt number and purity duality") {
    auto s = build_space({4, 4, 6}, 8);
    CHECK(schmidt_number(coherent_product_state(s, {0.3, 0.2, 0.1}, 1e-3), {0, 1}) == doctest::Approx(1.0));
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        PureState psi{s, oracle::random_vector(rng, s->dimension()), 0.0};
        const double p3 = purity(partial_trace(psi, {2}).matrix);
        const double p12 = purity(partial_trace(psi, {0, 1}).matrix);
        CHECK(p3 == doctest::Approx(p12).epsilon(1e-10));
        CHECK(schmidt_number(psi, {2}) == doctest::Approx(1.0 / p3).epsilon(1e-10));
        CHECK(schmidt_number(psi, {0, 1}) == doctest::Approx(1.0 / p3).epsilon(1e-10));
        CHECK(schmidt_number(psi, {2}) >= 1.0);
    }
}

TEST_CASE("global phase invariance") {
    auto s = build_space({4, 4, 6}, 8);
    std::mt19937_64 rng(12);
    PureState psi{s, oracle::random_vector(rng, s->dimension()), 0.0};
    PureState rotated = psi;
    rotated.amplitudes *= std::polar(1.0, 1.234);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(mean_photon(rotated, j) == doctest::Approx(mean_photon(psi, j)).epsilon(1e-13));
        CHECK(fano(rotated, j) == doctest::Approx(fano(psi, j)).epsilon(1e-12));
        CHECK(quadrature_variances(rotated, j).var_x == doctest::Approx(quadrature_variances(psi, j).var_x));
    }
    CHECK(schmidt_number(rotated, {2}) == doctest::Approx(schmidt_number(psi, {2})));
}

TEST_CASE("moment evaluator matches reduced matrices") {
    auto s = build_space({5, 5, 7}, 9);
    std::mt19937_64 rng(2);
    const auto v = oracle::random_vector(rng, s->dimension());
    for (std::size_t j = 0; j < 3; ++j) {
        const auto direct = ModeMomentEvaluator(*s, j)(v);
        const auto reduced = moments(reduced_matrix(*s, v, {j}));
        CHECK(direct.n == doctest::Approx(reduced.n).epsilon(1e-12));
        CHECK(direct.n2 == doctest::Approx(reduced.n2).epsilon(1e-12));
        CHECK(direct.b_bdag == doctest::Approx(reduced.b_bdag).epsilon(1e-12));
        CHECK(std::abs(direct.b - reduced.b) < 1e-12);
        CHECK(std::abs(direct.b2 - reduced.b2) < 1e-12);
    }
}

TEST_CASE("Wigner kernel against direct integration") {
    std::mt19937_64 rng(31);
    for (int d : {1, 2, 5, 10}) {
        const auto rho = oracle::random_density(rng, d, 2);
        for (auto [x, p] : {std::pair{0.0, 0.0}, {0.7, -1.1}, {-2.0, 0.4}, {1.5, 2.5}}) {
            CHECK(std::abs(wigner_point(rho, x, p) - oracle::wigner_integral(rho, x, p)) < 1e-6);
        }
    }
}

TEST_CASE("Wigner examples") {
    const MatrixC vac = fock_rho(0, 0);
    CHECK(std::abs(wigner_point(vac, 0, 0) - 1 / M_PI) < 1e-6);
    CHECK(wigner_point(vac, 1.0, -0.5) == doctest::Approx(std::exp(-1.25) / M_PI));
    CHECK(wigner_point(fock_rho(1, 3), 0, 0) == doctest::Approx(-1 / M_PI));

    const auto grid = wigner(fock_rho(1, 3), parse_grid_spec("-6,6,121,-6,6,121"));
    CHECK(std::abs(grid.normalization - 1) < 2e-3);
    CHECK(wigner_min(grid) == doctest::Approx(-1 / M_PI).epsilon(1e-6));
    CHECK(negativity_volume(grid) > 0.1);

    const auto vg = wigner(vac, GridSpec{});
    CHECK(wigner_min(vg) >= 0.0);
    CHECK(std::abs(negativity_volume(vg)) < 1e-3);
    const auto px = marginal_x(vg);
    for (std::size_t i = 0; i < px.size(); i += 20) {
        const double x = vg.spec.x(i);
        CHECK(px[i] == doctest::Approx(std::exp(-x * x) / std::sqrt(M_PI)).epsilon(1e-6));
    }
}

TEST_CASE("coherent marginals") {
    const auto rho = coherent_rho(std::polar(3.0, M_PI / 4), 45);
    const auto g = wigner(rho, GridSpec{});
    CHECK(std::abs(g.normalization - 1) < 2e-3);
    CHECK(g.warning.empty());
    const auto mx = marginal_moments(marginal_x(g), g.spec.x_min, g.spec.dx());
    const auto mp = marginal_moments(marginal_p(g), g.spec.p_min, g.spec.dp());
    CHECK(mx.mean == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(mp.mean == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(mx.variance == doctest::Approx(0.5).epsilon(1e-4));

    // A window that clips the state is flagged.
    const auto clipped = wigner(rho, parse_grid_spec("-2,2,41,-2,2,41"));
    CHECK_FALSE(clipped.warning.empty());
}

TEST_CASE("grid specs") {
    const auto g = parse_grid_spec("-8,8,201,-4,4,101");
    CHECK(g.dx() == doctest::Approx(0.08));
    CHECK(g.p_count == 101);
    CHECK_THROWS_AS(parse_grid_spec("1,2,3"), ConfigError);
    CHECK_THROWS_AS(parse_grid_spec("8,-8,201,-8,8,201"), ConfigError);
    CHECK_THROWS_AS(parse_grid_spec("-8,8,1,-8,8,201"), ConfigError);
    CHECK_THROWS_AS(parse_grid_spec("-8,8,x,-8,8,201"), ConfigError);
}
