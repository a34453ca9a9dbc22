#include "doctest.h"

#include <cmath>

#include "locsampler/amp.hpp"
#include "locsampler/error.hpp"
#include "locsampler/model.hpp"
#include "locsampler/oracle.hpp"
#include "locsampler/sampler.hpp"
#include "locsampler/state_evolution.hpp"
#include "locsampler/tap.hpp"

using namespace locsampler;

namespace {

Prior double_well()
{
    return normalize_unit_second_moment(Prior::continuous(double_well_potential(1.0, 1.0, 1.0, 0.3)));
}

DriftOracle identity() { return [](const Eigen::VectorXd& y, double) { return y; }; }

} // namespace

TEST_CASE("zero drift gives Brownian motion")
{
    SamplerConfig cfg;
    cfg.L = 4;
    cfg.Delta = 0.25;
    DriftOracle zero = [](const Eigen::VectorXd& y, double) { return Eigen::VectorXd::Zero(y.size()); };
    double ss = 0.0;
    const int reps = 10000, dim = 5;
    for (int r = 0; r < reps; ++r) {
        Rng rng(1, r);
        RunRecord rec = localize_general(zero, identity(), dim, cfg, rng);
        ss += rec.theta_alg.squaredNorm();
        CHECK(rec.diagnostics.size() == 5);
    }
    CHECK(std::abs(ss / (reps * dim) - 1.0) <= 0.03);
}

TEST_CASE("constant drift shifts the mean")
{
    SamplerConfig cfg;
    cfg.L = 10;
    cfg.Delta = 0.1;
    Eigen::VectorXd target(3);
    target << 1.0, -2.0, 0.5;
    DriftOracle drift = [&](const Eigen::VectorXd&, double) { return target; };
    const int reps = 4000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
    for (int r = 0; r < reps; ++r) {
        Rng rng(2, r);
        sum += localize_general(drift, identity(), 3, cfg, rng).theta_alg;
    }
    Eigen::VectorXd mean = sum / reps;
    double se = std::sqrt(1.0 / reps);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(mean(i) - target(i)) <= 3.0 * se);
}

TEST_CASE("trajectories, records and oracle failures")
{
    SamplerConfig cfg;
    cfg.L = 6;
    cfg.Delta = 0.5;
    cfg.record_trajectory = true;
    Rng rng(3);
    RunRecord rec = localize_general([](const Eigen::VectorXd& y, double) { return 0.5 * y; }, identity(), 2,
                                     cfg, rng);
    REQUIRE(rec.y_trajectory.size() == 7);
    REQUIRE(rec.drift_trajectory.size() == 7);
    CHECK(rec.y_trajectory[0].isZero());
    CHECK(rec.diagnostics[6].t == doctest::Approx(3.0));
    CHECK(rec.sign_used == 0);

    DriftOracle bad = [](const Eigen::VectorXd& y, double t) -> Eigen::VectorXd {
        if (t > 1.0)
            fail(Errc::NoConvergence, "boom");
        return y;
    };
    try {
        localize_general(bad, identity(), 2, cfg, rng);
        FAIL("expected OracleFailure");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::OracleFailure);
        CHECK(std::string(e.what()).find("step 3") != std::string::npos);
    }
    cfg.Delta = 0.0;
    CHECK_THROWS_AS(localize_general(bad, identity(), 2, cfg, rng), Error);
}

TEST_CASE("batched chains reproduce single chains")
{
    SamplerConfig cfg;
    cfg.L = 5;
    cfg.Delta = 0.2;
    auto single = [](const Eigen::VectorXd& y, double t) -> Eigen::VectorXd { return y.array().tanh() * t; };
    auto batch = [](const Eigen::MatrixXd& Y, double t) -> Eigen::MatrixXd { return Y.array().tanh() * t; };
    std::vector<Rng> rngs{Rng(5, 0), Rng(5, 1), Rng(5, 2)};
    std::vector<RunRecord> many = localize_general_batch(batch, batch, 4, cfg, rngs);
    for (int r = 0; r < 3; ++r) {
        Rng rng(5, r);
        RunRecord one = localize_general(single, single, 4, cfg, rng);
        CHECK((one.theta_alg - many[r].theta_alg).cwiseAbs().maxCoeff() <= 1e-14);
    }
}

TEST_CASE("exact-oracle localization samples the posterior")
{
    const Eigen::Index n = 8;
    const double beta = 1.5;
    SpikedInstance inst = gen_spiked(Prior::rademacher(), beta, n, 40);
    Eigen::VectorXd v = top_eigpair_canonical(inst.X).v;
    ExactDriftOracle oracle(inst.X, beta, Prior::rademacher(), v);
    ExactPosterior post = enumerate_posterior(inst.X, Eigen::VectorXd::Zero(n), 0.0, beta, Prior::rademacher(), v);
    SamplerConfig cfg;
    cfg.L = 500;
    cfg.Delta = 0.02;
    const int R = 4000;
    std::vector<Rng> rngs;
    for (int r = 0; r < R; ++r)
        rngs.emplace_back(7, r);
    BatchDriftOracle drift = [&](const Eigen::MatrixXd& Y, double t) { return oracle.batch(Y, t); };
    std::vector<RunRecord> runs = localize_general_batch(drift, drift, n, cfg, rngs);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (const RunRecord& rec : runs)
        mean += rec.theta_alg;
    mean /= R;
    CHECK((mean - post.mean).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("discrete spiked sampler drifts to the support")
{
    SpikedInstance inst = gen_spiked(Prior::rademacher(), 2.0, 1000, 11);
    SamplerConfig cfg;
    cfg.L = 500;
    cfg.Delta = 0.02;
    cfg.K_AMP = 15;
    Rng rng(11);
    RunRecord rec = sample_spiked_discrete(inst.X, 2.0, Prior::rademacher(), cfg, rng);
    const Eigen::VectorXd& m = rec.theta_alg;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i)
        worst = std::max(worst, std::min(std::abs(m(i) - 1.0), std::abs(m(i) + 1.0)));
    CHECK(worst <= 0.05);
    CHECK(std::abs(rec.sign_used) == 1);
    CHECK(std::abs(m.dot(inst.theta)) / 1000 >= 0.5);

    try {
        sample_spiked_discrete(inst.X, 1.0, Prior::rademacher(), cfg, rng);
        FAIL("expected SubcriticalBeta");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::SubcriticalBeta);
    }
    cfg.init = SpikedInit::SideInformation;
    cfg.L = 5;
    CHECK_NOTHROW(sample_spiked_discrete(inst.X, 0.5, Prior::rademacher(), cfg, rng));
}

TEST_CASE("non-symmetric prior uses the deterministic sign")
{
    Prior p = Prior::discrete({-2.0, 0.5}, {0.2, 0.8});
    SpikedInstance inst = gen_spiked(p, 3.0, 600, 12);
    SamplerConfig cfg;
    cfg.L = 20;
    cfg.Delta = 0.1;
    Rng rng(12);
    RunRecord rec = sample_spiked_discrete(inst.X, 3.0, p, cfg, rng);
    CHECK(rec.sign_used == 1);
    CHECK(rec.theta_alg.dot(inst.theta) > 0.0);
}

TEST_CASE("batched discrete sampler matches single runs")
{
    SpikedInstance inst = gen_spiked(Prior::three_point(), 2.5, 200, 13);
    SamplerConfig cfg;
    cfg.L = 10;
    cfg.Delta = 0.1;
    cfg.K_AMP = 6;
    std::vector<Rng> rngs{Rng(13, 0), Rng(13, 1)};
    std::vector<RunRecord> many = sample_spiked_discrete_batch(inst.X, 2.5, Prior::three_point(), cfg, rngs);
    for (int r = 0; r < 2; ++r) {
        Rng rng(13, r);
        RunRecord one = sample_spiked_discrete(inst.X, 2.5, Prior::three_point(), cfg, rng);
        CHECK((one.theta_alg - many[r].theta_alg).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(one.sign_used == many[r].sign_used);
    }
}

TEST_CASE("rounding to the support")
{
    Rng rng(14);
    Prior p = Prior::three_point();
    const double a = p.atoms()(2);
    Eigen::VectorXd m(4);
    m << -a, 0.0, a, 5.0;
    Eigen::VectorXd r = round_to_support(m, p, rng);
    CHECK(r(0) == -a);
    CHECK(r(1) == 0.0);
    CHECK(r(2) == a);
    CHECK(r(3) == a);

    const int N = 100000;
    Eigen::VectorXd half = Eigen::VectorXd::Constant(N, 0.5);
    Eigen::VectorXd out = round_to_support(half, Prior::rademacher(), rng);
    double frac = (out.array() > 0).cast<double>().mean();
    CHECK(std::abs(frac - 0.75) <= 3.0 * std::sqrt(0.75 * 0.25 / N));

    Eigen::VectorXd z = Eigen::VectorXd::Constant(N, 0.3);
    Eigen::VectorXd o = round_to_support(z, p, rng);
    double mu = o.mean();
    double sd = std::sqrt((o.array() - mu).square().mean());
    CHECK(std::abs(mu - 0.3) <= 3.0 * sd / std::sqrt(N));
    CHECK(((o.array() == 0.0) || (o.array() == a)).all());
}

TEST_CASE("continuous spiked sampler keeps the drift on the sphere")
{
    Prior p = double_well();
    const Eigen::Index n = 300;
    const double beta = 3.0;
    SpikedInstance inst = gen_spiked(p, beta, n, 15);
    SamplerConfig cfg;
    cfg.L = 8;
    cfg.Delta = 0.25;
    cfg.K_AMP = 8;
    cfg.K_GD = 5;
    cfg.zeta = 0.02;
    cfg.record_trajectory = true;
    Rng rng(15);
    RunRecord rec = sample_spiked_continuous(inst.X, beta, p, cfg, rng);
    for (int l = 0; l <= cfg.L; ++l) {
        double q = q_spiked(p, beta, l * cfg.Delta);
        CHECK(rec.drift_trajectory[l].squaredNorm() / n == doctest::Approx(q).epsilon(1e-10));
    }
    CHECK(rec.sign_used == 1);

    // Without descent steps the drift is the AMP output moved onto the sphere.
    cfg.K_GD = 0;
    Rng rng2(16);
    RunRecord plain = sample_spiked_continuous(inst.X, beta, p, cfg, rng2);
    Eigen::VectorXd nu = spiked_start(inst.X, beta, p, cfg);
    for (int l : {0, 3, 8}) {
        double t = std::max(l * cfg.Delta, kTimeFloor);
        Eigen::VectorXd m = amp_spiked(inst.X, plain.y_trajectory[l], t, beta, p, cfg.K_AMP, nu).m_hat;
        m *= std::sqrt(n * q_spiked(p, beta, t)) / m.norm();
        CHECK((m - plain.drift_trajectory[l]).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("linear sampler at vanishing noise recovers the signal")
{
    Prior p = Prior::three_point();
    LinearInstance inst = gen_linear(p, 20.0, 1e-4, 200, 17);
    SamplerConfig cfg;
    cfg.L = 10;
    cfg.Delta = 0.05;
    cfg.K_AMP = 15;
    Rng rng(17);
    RunRecord rec = sample_linear_high_snr(inst.X, inst.y0, p, 1e-4, inst.delta, cfg, rng);
    double rmse = std::sqrt((rec.theta_alg - inst.theta).squaredNorm() / 200);
    CHECK(rmse <= 0.02);
    CHECK(rec.diagnostics.front().t == doctest::Approx(1e4));
}

TEST_CASE("linear sampler with natural-gradient refinement")
{
    Prior p = Prior::three_point();
    LinearInstance inst = gen_linear(p, 20.0, 0.25, 100, 18);
    SamplerConfig cfg;
    cfg.L = 4;
    cfg.Delta = 0.05;
    cfg.K_AMP = 10;
    cfg.K_NGD = 5;
    cfg.record_trajectory = true;
    Rng rng(18);
    RunRecord rec = sample_linear_high_snr(inst.X, inst.y0, p, 0.25, inst.delta, cfg, rng);
    CHECK(rec.y_trajectory.size() == 5);
    CHECK(rec.y_trajectory[0].size() == inst.n);
    CHECK((rec.y_trajectory[0] - inst.y0 / 0.25).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(rec.theta_alg.size() == 100);
    CHECK(rec.theta_alg.allFinite());
}

TEST_CASE("low-SNR linear sampler")
{
    Prior p = Prior::rademacher();
    LinearInstance inst = gen_linear(p, 0.1, 4.0, 400, 19);
    SamplerConfig cfg;
    cfg.L = 20;
    cfg.Delta = 0.1;
    cfg.K_NGD = 20;
    Rng rng(19);
    RunRecord rec = sample_linear_low_snr(inst.X, inst.y0, p, 4.0, inst.delta, cfg, rng);
    CHECK(rec.theta_alg.cwiseAbs().maxCoeff() <= 1.0);

    cfg.L = 0;
    Rng rng0(20);
    RunRecord zero = sample_linear_low_snr(inst.X, inst.y0, p, 4.0, inst.delta, cfg, rng0);
    Eigen::VectorXd direct =
        linear_side_estimator(inst.X, inst.y0, Eigen::VectorXd::Zero(400), 0.0, p, 4.0, cfg);
    CHECK((zero.theta_alg - direct).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("matrix drift in the noiseless case")
{
    Prior p = Prior::rademacher();
    const Eigen::Index n = 200;
    Rng rng(21);
    Eigen::VectorXd theta = p.sample(n, rng);
    Eigen::MatrixXd Y = (10.0 / n) * theta * theta.transpose();
    Eigen::VectorXd m = matrix_drift_vector(Y, 10.0, p, 3);
    Eigen::MatrixXd M = m * m.transpose() / n;
    CHECK((M - theta * theta.transpose() / n).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("matrix-valued process recovers the spike")
{
    const Eigen::Index n = 300;
    int good = 0;
    const int reps = 4;
    for (int r = 0; r < reps; ++r) {
        SpikedInstance inst = gen_spiked(Prior::rademacher(), 2.0, n, 100 + r);
        SamplerConfig cfg;
        cfg.L = 40;
        cfg.Delta = 0.1;
        cfg.K_AMP = 8;
        Rng rng(22, r);
        RunRecord rec = sample_spiked_matrix_process(inst.X, 2.0, Prior::rademacher(), cfg, rng);
        good += std::abs(rec.theta_alg.dot(inst.theta)) / n >= 0.8;
        CHECK(rec.y_trajectory.empty());
    }
    CHECK(good >= reps - 1);
}

TEST_CASE("projection bounds the output")
{
    SamplerConfig cfg;
    cfg.L = 3;
    cfg.Delta = 1.0;
    cfg.projection_radius = 0.1;
    Rng rng(23);
    RunRecord rec = localize_general([](const Eigen::VectorXd& y, double) { return y; }, identity(), 50, cfg, rng);
    CHECK(rec.theta_alg.norm() <= 0.1 * std::sqrt(50.0) * (1 + 1e-14));
}

TEST_CASE("runs are deterministic in the seed")
{
    SpikedInstance inst = gen_spiked(Prior::three_point(), 2.0, 150, 24);
    SamplerConfig cfg;
    cfg.L = 15;
    cfg.Delta = 0.1;
    cfg.K_AMP = 5;
    cfg.record_trajectory = true;
    Rng a(24, 3), b(24, 3), c(24, 4);
    RunRecord ra = sample_spiked_discrete(inst.X, 2.0, Prior::three_point(), cfg, a);
    RunRecord rb = sample_spiked_discrete(inst.X, 2.0, Prior::three_point(), cfg, b);
    RunRecord rc = sample_spiked_discrete(inst.X, 2.0, Prior::three_point(), cfg, c);
    CHECK(ra.theta_alg == rb.theta_alg);
    CHECK(ra.sign_used == rb.sign_used);
    for (int l = 0; l <= cfg.L; ++l)
        CHECK(ra.y_trajectory[l] == rb.y_trajectory[l]);
    CHECK(ra.theta_alg != rc.theta_alg);
}
