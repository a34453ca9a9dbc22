#include "doctest.h"

#include <cmath>

#include "locsampler/rng.hpp"

using locsampler::Rng;

TEST_CASE("streams are reproducible and independent of consumption order")
{
    Rng a(42, 3), b(42, 3);
    for (int i = 0; i < 100; ++i)
        CHECK(a() == b());
    Rng c(42, 3);
    CHECK(c.at(57) == Rng(42, 3).at(57));
    CHECK(Rng(42, 3).at(0) != Rng(42, 4).at(0));
    CHECK(Rng(42, 3).at(0) != Rng(43, 3).at(0));
}

TEST_CASE("split streams are deterministic and distinct")
{
    Rng base(7);
    Rng s = base.split(11), t = base.split(11), u = base.split(12);
    bool differs_parent = false, differs_sibling = false;
    for (int i = 0; i < 10; ++i) {
        auto a = s(), b = t();
        CHECK(a == b);
        differs_parent |= a != base.at(static_cast<std::uint64_t>(i));
        differs_sibling |= a != u();
    }
    CHECK(differs_parent);
    CHECK(differs_sibling);
}

TEST_CASE("uniform and normal moments")
{
    Rng r(1);
    const int N = 200000;
    double su = 0, sn = 0, sn2 = 0, sn4 = 0;
    for (int i = 0; i < N; ++i) {
        double u = r.uniform();
        CHECK_UNARY(u > 0.0);
        CHECK_UNARY(u < 1.0);
        su += u;
        double g = r.normal();
        sn += g;
        sn2 += g * g;
        sn4 += g * g * g * g;
    }
    CHECK(su / N == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sn / N) < 4.0 / std::sqrt(N));
    CHECK(sn2 / N == doctest::Approx(1.0).epsilon(0.02));
    CHECK(sn4 / N == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("sign is balanced")
{
    Rng r(5);
    int s = 0;
    for (int i = 0; i < 10000; ++i)
        s += r.sign();
    CHECK(std::abs(s) < 400);
}
