#include "doctest.h"

#include <cmath>

#include "locsampler/amp.hpp"
#include "locsampler/error.hpp"
#include "locsampler/model.hpp"

using namespace locsampler;
using doctest::Approx;

namespace {

const Prior& skew_prior()
{
    static Prior p = Prior::discrete({-2.0, 0.5}, {0.2, 0.8});
    return p;
}

Eigen::VectorXd spectral(const Eigen::MatrixXd& X, double beta)
{
    return spectral_init(top_eigpair_canonical(X), beta);
}

} // namespace

TEST_CASE("spiked AMP with no iterations is the denoised start")
{
    SpikedInstance inst = gen_spiked(Prior::three_point(), 2.0, 100, 1);
    Eigen::VectorXd nu = spectral(inst.X, 2.0);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(100);
    AmpState st = amp_spiked(inst.X, y, 0.0, 2.0, Prior::three_point(), 0, nu);
    for (Eigen::Index i = 0; i < 100; ++i)
        CHECK(st.m_hat(i) == denoise(Prior::three_point(), nu(i), 3.0).mean);
}

TEST_CASE("spiked AMP follows state evolution")
{
    Prior r = Prior::rademacher();
    SpikedInstance inst = gen_spiked(r, 2.0, 2000, 11);
    Eigen::VectorXd nu = spectral(inst.X, 2.0);
    nu *= nu.dot(inst.theta) >= 0 ? 1.0 : -1.0;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(2000);
    AmpState st = amp_spiked(inst.X, y, 0.0, 2.0, r, 10, nu, std::nullopt, &inst.theta);
    SpikedSETrace se = run_se_spiked(r, 2.0, 0.0, 10);
    double pred = 1.0 - mmse(r, se.gammas[10]);
    CHECK(std::abs(st.m_hat.dot(inst.theta) / 2000 - pred) <= 0.05);
    CHECK(std::abs(st.m_hat.squaredNorm() / 2000 - pred) <= 0.05);
    REQUIRE(st.trace.size() == 11);
    CHECK(st.trace.back().se_prediction == Approx(pred));
    CHECK(st.trace.back().overlap_over_n == Approx(st.m_hat.dot(inst.theta) / 2000));
    CHECK(st.m_hat.cwiseAbs().maxCoeff() <= 1.0);

    AmpState again = amp_spiked(inst.X, y, 0.0, 2.0, r, 10, nu);
    CHECK(again.m_hat == st.m_hat);
}

TEST_CASE("odd equivariance under a flipped start")
{
    Prior p = Prior::three_point();
    SpikedInstance inst = gen_spiked(p, 1.8, 300, 3);
    Eigen::VectorXd nu = spectral(inst.X, 1.8);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(300);
    AmpState a = amp_spiked(inst.X, y, 0.0, 1.8, p, 6, nu);
    AmpState b = amp_spiked(inst.X, y, 0.0, 1.8, p, 6, -nu);
    CHECK(a.m_hat == -b.m_hat);
    CHECK(a.m_hat.maxCoeff() <= p.upper());
    CHECK(a.m_hat.minCoeff() >= p.lower());
}

TEST_CASE("batched AMP matches column by column")
{
    Prior p = Prior::rademacher();
    SpikedInstance inst = gen_spiked(p, 2.0, 200, 5);
    Eigen::VectorXd nu = spectral(inst.X, 2.0);
    Rng rng(4);
    Eigen::MatrixXd Y(200, 3);
    rng.fill_normal(Y);
    Eigen::MatrixXd M = amp_spiked_batch(inst.X, Y, 0.8, 2.0, p, 5, nu);
    for (int r = 0; r < 3; ++r) {
        AmpState s = amp_spiked(inst.X, Y.col(r), 0.8, 2.0, p, 5, nu);
        CHECK((M.col(r) - s.m_hat).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("matrix AMP")
{
    Prior r = Prior::rademacher();
    Rng rng(6);
    const Eigen::Index n = 200;
    Eigen::VectorXd theta = r.sample(n, rng);
    const double t = 10.0;
    Eigen::MatrixXd Y = (t / n) * theta * theta.transpose();
    Eigen::VectorXd nu = std::sqrt(n * t * (t - 1.0)) * theta.normalized();
    AmpState st = amp_matrix(Y, t, r, 3, nu);
    CHECK((st.m_hat - theta).cwiseAbs().maxCoeff() <= 1e-3);

    try {
        amp_matrix(Y, 1.0, r, 3, nu);
        FAIL("expected SubcriticalTime");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::SubcriticalTime);
    }

    SpikedSETrace se = run_se_spiked(r, 2.0, 0.0, 0);
    CHECK(se.gammas[0] == 3.0);
}

TEST_CASE("matrix AMP follows state evolution")
{
    Prior r = Prior::rademacher();
    Rng rng(7);
    const Eigen::Index n = 2000;
    const double t = 4.0;
    Eigen::VectorXd theta = r.sample(n, rng);
    Eigen::MatrixXd Y = std::sqrt(t) * sample_goe(n, rng);
    Y.noalias() += (t / n) * theta * theta.transpose();
    EigPair top = top_eigpair_canonical(Y);
    Eigen::VectorXd nu = std::sqrt(n * t * (t - 1.0)) * top.v;
    nu *= nu.dot(theta) >= 0 ? 1.0 : -1.0;
    AmpState st = amp_matrix(Y, t, r, 8, nu, &theta);
    SpikedSETrace se = run_se_spiked(r, 2.0, 0.0, 8, 3.0);
    CHECK(std::abs(st.m_hat.dot(theta) / n - (1.0 - mmse(r, se.gammas[8]))) <= 0.05);
}

TEST_CASE("sign algorithm")
{
    Eigen::VectorXd nu = Eigen::VectorXd::Ones(10);
    try {
        sign_align(Prior::rademacher(), 2.0, nu);
        FAIL("expected SymmetricPrior");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::SymmetricPrior);
    }
    int hits = 0;
    for (int trial = 0; trial < 20; ++trial) {
        SpikedInstance inst = gen_spiked(skew_prior(), 2.0, 1000, 500 + trial);
        Eigen::VectorXd v = spectral(inst.X, 2.0);
        int s = sign_align(skew_prior(), 2.0, v);
        CHECK(sign_align(skew_prior(), 2.0, -v) == -s);
        hits += s == (v.dot(inst.theta) >= 0 ? 1 : -1);
    }
    CHECK(hits >= 18);
}

TEST_CASE("linear AMP unrolled by hand")
{
    Prior p = Prior::three_point();
    Eigen::MatrixXd X(3, 2);
    X << 0.3, -0.7, 1.1, 0.4, -0.2, 0.9;
    Eigen::VectorXd y(3);
    y << 0.5, -1.0, 2.0;
    const double sigma2 = 0.5, delta = 1.5;
    AmpState st = amp_linear(X, y, p, sigma2, delta, 0);
    // f_{-1} = sigma2 (y - 0) / (sigma2 + 1), b^0 = X^T f_{-1}, m^0 = F(b^0 / sigma2; gamma_0)
    double gamma0 = delta / (sigma2 + 1.0);
    Eigen::VectorXd b0 = X.transpose() * (sigma2 / (sigma2 + 1.0) * y);
    for (int j = 0; j < 2; ++j)
        CHECK(st.m_hat(j) == Approx(denoise(p, b0(j) / sigma2, gamma0).mean).epsilon(1e-14));

    AmpState one = amp_linear(X, y, p, sigma2, delta, 1);
    LinearSETrace se = run_se_linear(p, delta, sigma2, 0.0, 1);
    Eigen::VectorXd a0 = X * st.m_hat - se.eta[0] * (sigma2 / (sigma2 + 1.0) * y);
    Eigen::VectorXd f0 = sigma2 * (y - a0) / (sigma2 + se.E(0));
    Eigen::VectorXd b1 = X.transpose() * f0 - se.xi[0] * st.m_hat;
    for (int j = 0; j < 2; ++j)
        CHECK(one.m_hat(j) == Approx(denoise(p, b1(j) / sigma2, se.gammas[1]).mean).epsilon(1e-12));
}

TEST_CASE("linear AMP follows state evolution")
{
    Prior p = Prior::three_point();
    LinearInstance inst = gen_linear(p, 20.0, 0.25, 1000, 21);
    AmpState st = amp_linear(inst.X, inst.y0, p, 0.25, inst.delta, 15, &inst.theta);
    LinearSETrace se = run_se_linear(p, inst.delta, 0.25, 0.0, 15);
    CHECK(std::abs((st.m_hat - inst.theta).squaredNorm() / 1000 - se.E(15)) <= 0.05);
    CHECK(st.trace.back().se_prediction == Approx(se.E(15)));
    for (Eigen::Index j = 0; j < st.s_hat.size(); ++j)
        CHECK(st.s_hat(j) >= st.m_hat(j) * st.m_hat(j));

    Eigen::VectorXd z = Eigen::VectorXd::Zero(1000);
    AmpState side0 = amp_linear_side(inst.X, inst.y0, z, 0.0, p, 0.25, inst.delta, 15);
    CHECK(side0.m_hat == st.m_hat);

    Rng rng(3);
    Eigen::VectorXd zs = inst.theta + rng.normal_vector(1000);
    AmpState side1 = amp_linear_side(inst.X, inst.y0, zs, 1.0, p, 0.25, inst.delta, 15, &inst.theta);
    LinearSETrace se1 = run_se_linear(p, inst.delta, 0.25, 1.0, 15);
    CHECK(std::abs((side1.m_hat - inst.theta).squaredNorm() / 1000 - se1.E(15)) <= 0.05);
}

TEST_CASE("linear AMP limits")
{
    Prior p = Prior::three_point();
    LinearInstance inst = gen_linear(p, 2.0, 1.0, 200, 8);
    AmpState noisy = amp_linear(inst.X, inst.y0, p, 1e6, inst.delta, 5);
    CHECK((noisy.m_hat.array() - p.mean()).abs().maxCoeff() <= 1e-2);

    const double t = 1e6;
    Eigen::VectorXd z = t * inst.theta;
    AmpState side = amp_linear_side(inst.X, inst.y0, z, t, p, 1.0, inst.delta, 5);
    CHECK((side.m_hat - inst.theta).cwiseAbs().maxCoeff() <= 1e-2);
}
