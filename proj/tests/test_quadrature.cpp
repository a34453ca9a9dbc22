#include "doctest.h"

#include <cmath>
#include <numbers>

#include "locsampler/quadrature.hpp"

using namespace locsampler;

TEST_CASE("Gauss-Hermite rule integrates normal moments")
{
    const GaussHermite& gh = gauss_hermite_normal();
    REQUIRE(gh.nodes.size() == 61);
    double m0 = 0, m2 = 0, m4 = 0, m1 = 0, c = 0;
    for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
        double x = gh.nodes[k], w = gh.weights[k];
        m0 += w;
        m1 += w * x;
        m2 += w * x * x;
        m4 += w * x * x * x * x;
        c += w * std::cos(x);
    }
    CHECK(m0 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(m1) < 1e-13);
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(c == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("small rules are exact for low-degree polynomials")
{
    GaussHermite gh = make_gauss_hermite_normal(5);
    double m6 = 0;
    for (std::size_t k = 0; k < gh.nodes.size(); ++k)
        m6 += gh.weights[k] * std::pow(gh.nodes[k], 6);
    CHECK(m6 == doctest::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("adaptive Simpson")
{
    double v = adaptive_simpson([](double x) { return std::exp(-x * x); }, 0.0, 3.0, 1e-12);
    CHECK(v == doctest::Approx(0.5 * std::sqrt(std::numbers::pi) * std::erf(3.0)).epsilon(1e-11));
    CHECK(adaptive_simpson([](double x) { return x * x; }, 0.0, 1.0, 1e-12) ==
          doctest::Approx(1.0 / 3.0));
}

TEST_CASE("Simpson weights")
{
    std::vector<double> w = simpson_weights(5, 0.25);
    double s = 0, s3 = 0;
    for (int i = 0; i < 5; ++i) {
        s += w[i];
        s3 += w[i] * std::pow(0.25 * i, 3);
    }
    CHECK(s == doctest::Approx(1.0));
    CHECK(s3 == doctest::Approx(0.25));
}
