#include "doctest.h"

#include <cmath>

#include "locsampler/error.hpp"
#include "locsampler/model.hpp"

using namespace locsampler;
using doctest::Approx;

namespace {

const SpikedInstance& spiked2000(double beta)
{
    static SpikedInstance b2 = gen_spiked(Prior::rademacher(), 2.0, 2000, 101);
    static SpikedInstance b3 = gen_spiked(Prior::rademacher(), 3.0, 2000, 102);
    return beta == 2.0 ? b2 : b3;
}

} // namespace

TEST_CASE("GOE entries")
{
    Rng r1(1);
    Eigen::MatrixXd w1 = sample_goe(1, r1);
    REQUIRE(w1.rows() == 1);
    CHECK(std::isfinite(w1(0, 0)));

    Rng rng(5);
    const Eigen::Index n = 500;
    Eigen::MatrixXd W = sample_goe(n, rng);
    CHECK((W - W.transpose()).cwiseAbs().maxCoeff() == 0.0);
    double off = 0, diag = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        diag += W(j, j) * W(j, j);
        for (Eigen::Index i = 0; i < j; ++i)
            off += W(i, j) * W(i, j);
    }
    off /= n * (n - 1) / 2.0;
    diag /= n;
    CHECK(off * n == Approx(1.0).epsilon(0.05));
    CHECK(diag * n == Approx(2.0).epsilon(0.2));
}

TEST_CASE("GOE spectral edge")
{
    Rng rng(8);
    Eigen::MatrixXd W = sample_goe(2000, rng);
    EigPair top = top_eigpair_canonical(W);
    EigPair bottom = top_eigpair_canonical(-W);
    double radius = std::max(top.lambda, bottom.lambda);
    CHECK(radius >= 1.9);
    CHECK(radius <= 2.1);
}

TEST_CASE("spiked instances")
{
    SpikedInstance z = gen_spiked(Prior::rademacher(), 0.0, 50, 9);
    Rng noise(9, 2);
    CHECK(z.X == sample_goe(50, noise));

    SpikedInstance a = gen_spiked(Prior::rademacher(), 1.5, 60, 4);
    SpikedInstance b = gen_spiked(Prior::rademacher(), 1.5, 60, 4);
    CHECK(a.X == b.X);
    CHECK(a.theta == b.theta);
    CHECK((a.X - a.X.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Rng n2(4, 2);
    Eigen::MatrixXd W = sample_goe(60, n2);
    for (Eigen::Index i = 0; i < 60; ++i)
        CHECK(a.X(i, i) - W(i, i) == Approx(1.5 / 60).epsilon(1e-12));
}

TEST_CASE("quadratic form of the spike")
{
    const int reps = 100;
    const double beta = 1.7;
    double s = 0, s2 = 0;
    for (int r = 0; r < reps; ++r) {
        SpikedInstance inst = gen_spiked(Prior::rademacher(), beta, 200, 1000 + r);
        double v = inst.theta.dot(inst.X * inst.theta) / 200.0;
        s += v;
        s2 += v * v;
    }
    double mean = s / reps, se = std::sqrt((s2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean - beta) <= 3.0 * se + 1e-12);
}

TEST_CASE("linear instances")
{
    LinearInstance li = gen_linear(Prior::three_point(), 2.0, 1e-18, 50, 3);
    CHECK(li.n == 100);
    CHECK(li.delta == 2.0);
    Eigen::VectorXd ls = li.X.colPivHouseholderQr().solve(li.y0);
    CHECK((ls - li.theta).cwiseAbs().maxCoeff() <= 1e-6);

    LinearInstance odd = gen_linear(Prior::three_point(), 0.333, 1.0, 10, 3);
    CHECK(odd.n == 3);
    CHECK(odd.delta == Approx(0.3));

    const int reps = 60;
    const double sigma2 = 0.7;
    double s = 0, s2 = 0, msq = 0;
    for (int r = 0; r < reps; ++r) {
        LinearInstance inst = gen_linear(Prior::three_point(), 1.5, sigma2, 80, 50 + r);
        double v = (inst.y0 - inst.X * inst.theta).squaredNorm() / inst.n;
        s += v;
        s2 += v * v;
        msq += inst.X.squaredNorm() / inst.X.size();
    }
    double mean = s / reps, se = std::sqrt((s2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean - sigma2) <= 3.0 * se);
    CHECK(msq / reps * 80 == Approx(1.0).epsilon(0.05));

    LinearInstance c = gen_linear(Prior::three_point(), 1.5, sigma2, 80, 50);
    LinearInstance d = gen_linear(Prior::three_point(), 1.5, sigma2, 80, 50);
    CHECK(c.X == d.X);
    CHECK(c.y0 == d.y0);
}

TEST_CASE("top eigenpair")
{
    Eigen::MatrixXd D = Eigen::Vector2d(3.0, 1.0).asDiagonal();
    EigPair e = top_eigpair_canonical(D);
    CHECK(e.lambda == Approx(3.0));
    CHECK(std::abs(e.v(0)) == Approx(1.0));

    Eigen::VectorXd u(4);
    u << 1.0, -2.0, 0.5, 3.0;
    EigPair r = top_eigpair_canonical(u * u.transpose());
    CHECK(r.lambda == Approx(u.squaredNorm()));
    CHECK(std::abs(r.v.dot(u.normalized())) == Approx(1.0));

    const SpikedInstance& inst = spiked2000(2.0);
    EigPair big = top_eigpair_canonical(inst.X);
    CHECK(std::abs(big.lambda - 2.5) <= 0.05);
    double res = (inst.X * big.v - big.lambda * big.v).norm();
    CHECK(res <= 1e-8 * inst.X.norm());
    CHECK(big.v.norm() == Approx(1.0));

    Rng rng(12);
    int plus = 0;
    for (int i = 0; i < 200; ++i) {
        EigPair s = top_eigpair(D, rng);
        plus += s.v(0) > 0;
    }
    CHECK(plus > 70);
    CHECK(plus < 130);
}

TEST_CASE("spectral initialization")
{
    Eigen::MatrixXd D = Eigen::Vector2d(3.0, 1.0).asDiagonal();
    Eigen::VectorXd nu = spectral_init(top_eigpair_canonical(D), std::sqrt(2.0));
    CHECK(nu.squaredNorm() == Approx(4.0));
    Rng rng(1);
    try {
        spectral_init(D, 1.0, rng);
        FAIL("expected SubcriticalBeta");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::SubcriticalBeta);
    }

    const SpikedInstance& inst = spiked2000(2.0);
    EigPair top = top_eigpair_canonical(inst.X);
    double n = 2000.0;
    double align = std::pow(inst.theta.dot(std::sqrt(n) * top.v), 2) / (n * n);
    CHECK(std::abs(align - 0.75) <= 0.05);
}

TEST_CASE("beta estimation")
{
    CHECK(estimate_beta(2.5) == Approx(2.0));
    CHECK(estimate_beta(2.0 + 1e-9) == Approx(1.0).epsilon(1e-4));
    CHECK_THROWS_AS(estimate_beta(2.0), Error);
    CHECK_THROWS_AS(estimate_beta(1.0), Error);
    EigPair top = top_eigpair_canonical(spiked2000(3.0).X);
    CHECK(std::abs(estimate_beta(top.lambda) - 3.0) <= 0.05);
}
