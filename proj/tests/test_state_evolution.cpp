#include "doctest.h"

#include <cmath>

#include "locsampler/error.hpp"
#include "locsampler/state_evolution.hpp"

using namespace locsampler;
using doctest::Approx;

TEST_CASE("spiked recursion")
{
    Prior r = Prior::rademacher();
    SpikedSETrace tr = run_se_spiked(r, 2.0, 0.0, 30);
    CHECK(tr.gammas[0] == 3.0);
    REQUIRE(tr.gammas.size() == 31);
    for (std::size_t k = 0; k + 1 < tr.gammas.size(); ++k) {
        CHECK(tr.gammas[k + 1] >= tr.gammas[k] - 1e-12);
        CHECK(tr.gammas[k] <= tr.gamma_star + 1e-9);
        CHECK(tr.onsager[k + 1] <= tr.onsager[k] + 1e-12);
        CHECK(tr.onsager[k] == Approx(4.0 * mmse(r, tr.gammas[k])));
    }
    CHECK(tr.q == Approx(1.0 - mmse(r, tr.gamma_star)));

    // Bisection on g(gamma) = beta^2 (1 - mmse(gamma)) - gamma, positive below the fixed point.
    double lo = 3.0, hi = 4.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (4.0 * (1.0 - mmse(r, mid)) - mid > 0 ? lo : hi) = mid;
    }
    CHECK(std::abs(tr.gamma_star - 0.5 * (lo + hi)) <= 1e-9);

    try {
        run_se_spiked(r, 1.0, 0.0, 3);
        FAIL("expected SubcriticalBeta");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::SubcriticalBeta);
    }
    SpikedSETrace side = run_se_spiked(r, 0.5, 2.0, 5, 2.0);
    CHECK(side.gammas[0] == 2.0);
}

TEST_CASE("spiked potential")
{
    Prior r = Prior::three_point();
    CHECK(phi_spiked(r, 1.3, 2.0, 1.3) == Approx(mutual_info(r, 1.3)));
    for (double t : {0.0, 0.7}) {
        SpikedSETrace tr = run_se_spiked(r, 2.0, t, 0);
        double h = 1e-4;
        double d = (phi_spiked(r, tr.gamma_star + h, 2.0, t) - phi_spiked(r, tr.gamma_star - h, 2.0, t)) / (2 * h);
        CHECK(std::abs(d) <= 1e-6);
    }
    double prev = phi_spiked(r, 20.0, 2.0, 0.0);
    for (double g = 21.0; g < 60; g += 1.0) {
        double v = phi_spiked(r, g, 2.0, 0.0);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("fixed point scan")
{
    Prior r = Prior::rademacher();
    std::vector<double> grid;
    for (int i = 0; i <= 400; ++i)
        grid.push_back(0.01 + 40.0 * i / 400);
    ScanResult s = fixed_point_scan([&](double g) { return phi_spiked(r, g, 4.0, 0.0); }, grid);
    CHECK(s.minimizers.size() == 1);
    SpikedSETrace tr = run_se_spiked(r, 4.0, 0.0, 0);
    CHECK(std::abs(s.global_minimizer - tr.gamma_star) <= 0.1);
    CHECK(s.first_is_global);

    std::vector<double> sym;
    for (int i = -50; i <= 50; ++i)
        sym.push_back(0.02 * i + 0.001);
    ScanResult q = fixed_point_scan([](double g) { return g * g; }, sym);
    REQUIRE(q.minimizers.size() == 1);
    CHECK(q.minimizers[0] == Approx(0.001));

    std::vector<double> wide;
    for (int i = 0; i <= 300; ++i)
        wide.push_back(-3.0 + 0.02 * i);
    ScanResult dw = fixed_point_scan([](double x) { return (x * x - 1) * (x * x - 1) - 0.1 * x; }, wide);
    CHECK(dw.minimizers.size() == 2);
    CHECK_FALSE(dw.first_is_global);
    CHECK(dw.global_minimizer > 0);
}

TEST_CASE("diagnostics record the stationary points")
{
    SpikedSETrace tr = run_se_spiked(Prior::rademacher(), 4.0, 0.0, 0);
    diagnose_spiked(Prior::rademacher(), tr);
    CHECK(std::abs(tr.gamma_global - tr.gamma_star) <= 0.2);
    CHECK_FALSE(tr.phi_at_fixed_points.empty());
}

TEST_CASE("large beta fixed point lies above beta^2 - 1")
{
    for (const Prior& p : {Prior::rademacher(), Prior::three_point()})
        for (double b : {4.0, 5.0})
            for (double t : {0.0, 1.0})
                CHECK(run_se_spiked(p, b, t, 0).gamma_star >= b * b - 1.0);
}

TEST_CASE("q is a monotone probability-like constant")
{
    Prior p = Prior::three_point();
    double prev = -1;
    for (double t = 0.0; t < 5; t += 0.5) {
        double q = q_spiked(p, 2.0, t);
        CHECK(q >= 0.0);
        CHECK(q <= 1.0);
        CHECK(q >= prev - 1e-12);
        prev = q;
    }
    prev = -1;
    for (double b = 1.2; b < 4; b += 0.4) {
        double q = q_spiked(p, b, 0.5);
        CHECK(q >= prev - 1e-12);
        prev = q;
    }
    CHECK(q_spiked(p, 2.0, 0.3) == run_se_spiked(p, 2.0, 0.3, 0).q);
    CHECK(gamma_spiked(p, 0.5, 1.0) == Approx(run_se_spiked(p, 0.5, 1.0, 0, 1.0).gamma_star));
}

TEST_CASE("linear recursion")
{
    Prior p = Prior::three_point();
    LinearSETrace tr = run_se_linear(p, 20.0, 0.25, 0.0, 40);
    CHECK(tr.E(-1) == 1.0);
    CHECK(tr.E(0) == Approx(mmse(p, 20.0 / 1.25)));
    for (int k = 0; k <= 40; ++k) {
        CHECK(tr.E(k) >= 0.0);
        CHECK(tr.E(k) <= 1.0);
        if (k > 0)
            CHECK(tr.E(k) <= tr.E(k - 1) + 1e-15);
        CHECK(tr.gammas[k] == Approx(20.0 / (0.25 + tr.E(k - 1))));
        CHECK(tr.xi[k] == Approx(-20.0 * 0.25 / (0.25 + tr.E(k))));
        CHECK(tr.eta[k] == Approx(tr.E(k) / 0.25));
    }
    for (double t : {0.0, 0.5, 2.0}) {
        LinearSETrace s = run_se_linear(p, 20.0, 0.25, t, 40);
        for (int k = 0; k <= 40; ++k)
            CHECK(std::abs(s.E(k) - s.E_star) <= std::abs(1.0 - s.E_star) / std::pow(2.0, k + 1));
        CHECK(s.E_star == Approx(mmse(p, 20.0 / (0.25 + s.E_star) + t)).epsilon(1e-10));
    }
    LinearSETrace big = run_se_linear(p, 1.0, 1.0, 1e6, 3);
    CHECK(big.E(3) <= 1e-6);
}

TEST_CASE("linear potential")
{
    Prior p = Prior::three_point();
    LinearSETrace tr = run_se_linear(p, 20.0, 0.25, 0.0, 0);
    double gs = 20.0 / (0.25 + tr.E_star);
    double h = 1e-4;
    double d = (phi_linear(p, gs + h, 0.25, 20.0) - phi_linear(p, gs - h, 0.25, 20.0)) / (2 * h);
    CHECK(std::abs(d) <= 1e-5);
    CHECK(phi_linear(p, 1e-8, 0.25, 20.0) > phi_linear(p, 1e-4, 0.25, 20.0));
    CHECK(phi_linear(p, 1e-4, 0.25, 20.0) > phi_linear(p, 1e-1, 0.25, 20.0));
    std::vector<double> v;
    for (double g = 1.0; g <= 100.0; g += 0.5)
        v.push_back(phi_linear(p, g, 0.25, 20.0));
    for (std::size_t i = 1; i + 1 < v.size(); ++i)
        CHECK(v[i + 1] - 2 * v[i] + v[i - 1] >= -1e-9);
    CHECK_THROWS_AS(phi_linear(p, 0.0, 0.25, 20.0), Error);
}
