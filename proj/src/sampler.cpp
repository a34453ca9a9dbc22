#include "locsampler/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "locsampler/amp.hpp"
#include "locsampler/error.hpp"
#include "locsampler/model.hpp"
#include "locsampler/tap.hpp"

namespace locsampler {

void SamplerConfig::validate() const
{
    require(L >= 0, Errc::InvalidArgument, "L must be nonnegative");
    require(Delta > 0.0 && std::isfinite(Delta), Errc::InvalidArgument, "Delta must be positive");
    require(K_AMP >= 0 && K_GD >= 0 && K_NGD >= 0, Errc::InvalidArgument,
            "iteration counts must be nonnegative");
    require(zeta >= 0.0 && eta >= 0.0, Errc::InvalidArgument, "inner step sizes must be nonnegative");
    if (projection_radius)
        require(*projection_radius > 0.0, Errc::InvalidArgument, "projection radius must be positive");
}

namespace {

StepDiagnostic diagnose(int ell, double t, const Eigen::VectorXd& y, const Eigen::VectorXd& m)
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double ny = static_cast<double>(y.size()), nm = static_cast<double>(m.size());
    return {ell,
            t,
            y.norm() / std::sqrt(ny),
            m.squaredNorm() / nm,
            m.size() > 0 ? m(0) : nan,
            m.size() > 1 ? m(1) : nan};
}

template <typename F, typename... Args>
auto call_oracle(int ell, F&& f, Args&&... args)
{
    try {
        return f(std::forward<Args>(args)...);
    } catch (const Error& e) {
        fail(Errc::OracleFailure, "step " + std::to_string(ell) + ": " + e.what());
    }
}

void project(Eigen::VectorXd& v, const SamplerConfig& config)
{
    if (!config.projection_radius)
        return;
    double r = *config.projection_radius * std::sqrt(static_cast<double>(v.size()));
    double nv = v.norm();
    if (nv > r)
        v *= r / nv;
}

void record_step(RunRecord& rec, const SamplerConfig& config, int ell, double t,
                 const Eigen::VectorXd& y, const Eigen::VectorXd& m)
{
    rec.diagnostics.push_back(diagnose(ell, t, y, m));
    if (config.record_trajectory) {
        rec.y_trajectory.push_back(y);
        rec.drift_trajectory.push_back(m);
    }
}

void apply_sign(RunRecord& rec, const Prior& prior, Rng& rng)
{
    rec.sign_used = prior.is_symmetric() ? rng.sign() : 1;
    if (rec.sign_used < 0)
        rec.theta_alg = -rec.theta_alg;
}

} // namespace

RunRecord localize_general(const DriftOracle& drift, const DriftOracle& final_oracle,
                           Eigen::Index dim, const SamplerConfig& config, Rng& rng)
{
    config.validate();
    require(dim >= 1, Errc::InvalidArgument, "dimension must be positive");
    const double sd = std::sqrt(config.Delta);
    RunRecord rec;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd w(dim);
    for (int ell = 0; ell < config.L; ++ell) {
        double t = ell * config.Delta;
        Eigen::VectorXd m = call_oracle(ell, drift, y, t);
        if (m.size() != dim)
            fail(Errc::OracleFailure, "drift oracle returned the wrong dimension");
        record_step(rec, config, ell, t, y, m);
        rng.fill_normal(w.data(), dim);
        y += config.Delta * m + sd * w;
    }
    double T = config.L * config.Delta;
    Eigen::VectorXd out = call_oracle(config.L, final_oracle, y, T);
    record_step(rec, config, config.L, T, y, out);
    project(out, config);
    rec.theta_alg = std::move(out);
    return rec;
}

std::vector<RunRecord> localize_general_batch(const BatchDriftOracle& drift,
                                              const BatchDriftOracle& final_oracle,
                                              Eigen::Index dim, const SamplerConfig& config,
                                              std::vector<Rng>& rngs)
{
    config.validate();
    require(dim >= 1, Errc::InvalidArgument, "dimension must be positive");
    const Eigen::Index R = static_cast<Eigen::Index>(rngs.size());
    const double sd = std::sqrt(config.Delta);
    std::vector<RunRecord> recs(R);
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(dim, R);
    Eigen::MatrixXd W(dim, R);
    for (int ell = 0; ell < config.L; ++ell) {
        double t = ell * config.Delta;
        Eigen::MatrixXd M = call_oracle(ell, drift, Y, t);
        if (M.rows() != dim || M.cols() != R)
            fail(Errc::OracleFailure, "drift oracle returned the wrong shape");
        for (Eigen::Index r = 0; r < R; ++r) {
            record_step(recs[r], config, ell, t, Y.col(r), M.col(r));
            rngs[r].fill_normal(W.col(r).data(), dim);
        }
        Y += config.Delta * M + sd * W;
    }
    double T = config.L * config.Delta;
    Eigen::MatrixXd M = call_oracle(config.L, final_oracle, Y, T);
    for (Eigen::Index r = 0; r < R; ++r) {
        Eigen::VectorXd out = M.col(r);
        record_step(recs[r], config, config.L, T, Y.col(r), out);
        project(out, config);
        recs[r].theta_alg = std::move(out);
    }
    return recs;
}

Eigen::VectorXd spiked_start(const Eigen::MatrixXd& X, double beta, const Prior& prior,
                             const SamplerConfig& config)
{
    if (config.init == SpikedInit::SideInformation)
        return {};
    if (!(beta > 1.0))
        fail(Errc::SubcriticalBeta, "spectral start needs beta > 1");
    Eigen::VectorXd nu = spectral_init(top_eigpair_canonical(X), beta);
    if (!prior.is_symmetric())
        nu *= sign_align(prior, beta, nu);
    return nu;
}

namespace {

struct SpikedAmpDrift {
    const Eigen::MatrixXd& X;
    double beta;
    const Prior& prior;
    int K;
    SpikedInit init;
    Eigen::VectorXd nu;

    Eigen::VectorXd operator()(const Eigen::VectorXd& y, double t) const
    {
        if (init == SpikedInit::SideInformation)
            return amp_spiked(X, y, t, beta, prior, K, y, std::max(t, kTimeFloor)).m_hat;
        return amp_spiked(X, y, t, beta, prior, K, nu).m_hat;
    }

    Eigen::MatrixXd operator()(const Eigen::MatrixXd& Y, double t) const
    {
        if (init == SpikedInit::SideInformation)
            return amp_spiked_batch(X, Y, t, beta, prior, K, Y, std::max(t, kTimeFloor));
        return amp_spiked_batch(X, Y, t, beta, prior, K, nu);
    }
};

SpikedAmpDrift make_amp_drift(const Eigen::MatrixXd& X, double beta, const Prior& prior,
                              const SamplerConfig& config, const Eigen::VectorXd* nu)
{
    if (X.rows() != X.cols())
        fail(Errc::DimensionMismatch, "spiked observation must be square");
    if (config.init == SpikedInit::Spectral && !(beta > 1.0))
        fail(Errc::SubcriticalBeta, "spectral start needs beta > 1");
    Eigen::VectorXd start = nu ? *nu : spiked_start(X, beta, prior, config);
    if (config.init == SpikedInit::Spectral && start.size() != X.rows())
        fail(Errc::DimensionMismatch, "spectral start has the wrong length");
    return {X, beta, prior, config.K_AMP, config.init, std::move(start)};
}

} // namespace

RunRecord sample_spiked_discrete(const Eigen::MatrixXd& X, double beta, const Prior& prior,
                                 const SamplerConfig& config, Rng& rng, const Eigen::VectorXd* nu)
{
    if (!prior.is_discrete())
        fail(Errc::InvalidArgument, "this sampler needs a discrete prior");
    SpikedAmpDrift drift = make_amp_drift(X, beta, prior, config, nu);
    DriftOracle f = [&](const Eigen::VectorXd& y, double t) { return drift(y, t); };
    RunRecord rec = localize_general(f, f, X.rows(), config, rng);
    apply_sign(rec, prior, rng);
    return rec;
}

std::vector<RunRecord> sample_spiked_discrete_batch(const Eigen::MatrixXd& X, double beta,
                                                    const Prior& prior, const SamplerConfig& config,
                                                    std::vector<Rng>& rngs, const Eigen::VectorXd* nu)
{
    if (!prior.is_discrete())
        fail(Errc::InvalidArgument, "this sampler needs a discrete prior");
    SpikedAmpDrift drift = make_amp_drift(X, beta, prior, config, nu);
    BatchDriftOracle f = [&](const Eigen::MatrixXd& Y, double t) { return drift(Y, t); };
    std::vector<RunRecord> recs = localize_general_batch(f, f, X.rows(), config, rngs);
    for (std::size_t r = 0; r < recs.size(); ++r)
        apply_sign(recs[r], prior, rngs[r]);
    return recs;
}

Eigen::VectorXd round_to_support(const Eigen::VectorXd& m, const Prior& prior, Rng& rng)
{
    if (!prior.is_discrete())
        fail(Errc::InvalidArgument, "rounding needs a discrete prior");
    const Eigen::ArrayXd& atoms = prior.atoms();
    const double* begin = atoms.data();
    const double* end = begin + atoms.size();
    Eigen::VectorXd out(m.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        double x = std::clamp(m(i), atoms(0), atoms(atoms.size() - 1));
        const double* hi = std::upper_bound(begin, end, x);
        if (hi == end) {
            out(i) = atoms(atoms.size() - 1);
            continue;
        }
        const double* lo = hi - 1;
        double p_up = (x - *lo) / (*hi - *lo);
        out(i) = rng.uniform() < p_up ? *hi : *lo;
    }
    return out;
}

RunRecord sample_spiked_continuous(const Eigen::MatrixXd& X, double beta, const Prior& prior,
                                   const SamplerConfig& config, Rng& rng, const Eigen::VectorXd* nu)
{
    if (prior.is_discrete())
        fail(Errc::InvalidArgument, "this sampler needs a continuous prior");
    SpikedAmpDrift amp = make_amp_drift(X, beta, prior, config, nu);
    DriftOracle f = [&](const Eigen::VectorXd& y, double t) {
        Eigen::VectorXd m0 = amp(y, t);
        TapSpikedProblem pb = make_tap_spiked(X, y, beta, t, prior);
        return tangent_gd(pb, m0, config.K_GD, config.zeta);
    };
    RunRecord rec = localize_general(f, f, X.rows(), config, rng);
    apply_sign(rec, prior, rng);
    return rec;
}

Eigen::VectorXd linear_estimator(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const Prior& prior, double sigma2, double delta,
                                 const SamplerConfig& config,
                                 std::shared_ptr<const Eigen::MatrixXd> gram)
{
    AmpState amp = amp_linear(X, y, prior, sigma2, delta, config.K_AMP);
    if (config.K_NGD == 0 || config.eta == 0.0)
        return amp.m_hat;
    LinearProblem pb = make_linear_problem(X, y, sigma2, std::move(gram));
    TapLinearState init = make_tap_linear_state(prior, amp.m_hat, amp.s_hat);
    return ngd_linear(pb, prior, init, config.K_NGD, config.eta).m;
}

RunRecord sample_linear_high_snr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y0,
                                 const Prior& prior, double sigma2, double delta,
                                 const SamplerConfig& config, Rng& rng,
                                 std::shared_ptr<const Eigen::MatrixXd> gram)
{
    config.validate();
    require(sigma2 > 0.0, Errc::InvalidArgument, "noise variance must be positive");
    if (y0.size() != X.rows())
        fail(Errc::DimensionMismatch, "response length differs from design rows");
    const Eigen::Index n = X.rows();
    const double t0 = 1.0 / sigma2;
    const double sd = std::sqrt(config.Delta);
    RunRecord rec;
    Eigen::VectorXd y = y0 / sigma2;
    Eigen::VectorXd w(n);
    auto est = [&](int ell, double t) {
        return call_oracle(ell, [&] {
            return linear_estimator(X, y / t, prior, 1.0 / t, delta, config, gram);
        });
    };
    for (int ell = 0; ell < config.L; ++ell) {
        double t = t0 + ell * config.Delta;
        Eigen::VectorXd m = est(ell, t);
        record_step(rec, config, ell, t, y, m);
        rng.fill_normal(w.data(), n);
        y += config.Delta * (X * m) + sd * w;
    }
    double T = t0 + config.L * config.Delta;
    Eigen::VectorXd out = est(config.L, T);
    record_step(rec, config, config.L, T, y, out);
    project(out, config);
    rec.theta_alg = std::move(out);
    return rec;
}

namespace {

Eigen::VectorXd side_ngd(const LinearProblem& pb, const Prior& prior, const Eigen::VectorXd& z,
                         double t, const SamplerConfig& config)
{
    if (z.size() != pb.p)
        fail(Errc::DimensionMismatch, "side channel has the wrong dimension");
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(pb.p);
    TapLinearState init = tap_linear_state_from_natural(prior, zero, zero);
    SideChannel side{z, std::max(t, kTimeFloor), !(t > 0.0)};
    return ngd_linear(pb, prior, init, config.K_NGD, config.eta, &side).m;
}

} // namespace

Eigen::VectorXd linear_side_estimator(const Eigen::MatrixXd& X, const Eigen::VectorXd& y0,
                                      const Eigen::VectorXd& z, double t, const Prior& prior,
                                      double sigma2, const SamplerConfig& config,
                                      std::shared_ptr<const Eigen::MatrixXd> gram)
{
    LinearProblem pb = make_linear_problem(X, y0, sigma2, std::move(gram));
    return side_ngd(pb, prior, z, t, config);
}

RunRecord sample_linear_low_snr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y0,
                                const Prior& prior, double sigma2, double delta,
                                const SamplerConfig& config, Rng& rng,
                                std::shared_ptr<const Eigen::MatrixXd> gram)
{
    (void)delta;  // the TAP drift depends on the design only through X
    require(sigma2 > 0.0, Errc::InvalidArgument, "noise variance must be positive");
    LinearProblem pb = make_linear_problem(X, y0, sigma2, std::move(gram));
    DriftOracle f = [&](const Eigen::VectorXd& z, double t) {
        return side_ngd(pb, prior, z, t, config);
    };
    return localize_general(f, f, X.cols(), config, rng);
}

Eigen::VectorXd matrix_drift_vector(const Eigen::MatrixXd& Y, double t, const Prior& prior, int K)
{
    if (!(t > 1.0))
        fail(Errc::SubcriticalTime, "matrix drift needs t > 1");
    const double n = static_cast<double>(Y.rows());
    EigPair top = top_eigpair_canonical(Y);
    Eigen::VectorXd nu = std::sqrt(n * t * (t - 1.0)) * top.v.normalized();
    if (!prior.is_symmetric())
        nu *= sign_from_characteristic(prior, nu, t - 1.0);
    return amp_matrix(Y, t, prior, K, nu).m_hat;
}

RunRecord sample_spiked_matrix_process(const Eigen::MatrixXd& X, double beta, const Prior& prior,
                                       const SamplerConfig& config, Rng& rng)
{
    config.validate();
    if (!(beta > 1.0))
        fail(Errc::SubcriticalBeta, "matrix process needs beta > 1");
    if (X.rows() != X.cols())
        fail(Errc::DimensionMismatch, "spiked observation must be square");
    const Eigen::Index n = X.rows();
    const double nn = static_cast<double>(n);
    const double b2 = beta * beta;
    const double sd = std::sqrt(config.Delta);
    RunRecord rec;
    Eigen::MatrixXd Y = beta * X;
    auto step_diag = [&](int ell, double t, const Eigen::VectorXd& m) {
        rec.diagnostics.push_back({ell, t, Y.norm() / std::sqrt(nn), m.squaredNorm() / nn, m(0),
                                   n > 1 ? m(1) : std::numeric_limits<double>::quiet_NaN()});
        if (config.record_trajectory)
            rec.drift_trajectory.push_back(m);
    };
    for (int ell = 0; ell < config.L; ++ell) {
        double t = b2 + ell * config.Delta;
        Eigen::VectorXd m =
            call_oracle(ell, [&] { return matrix_drift_vector(Y, t, prior, config.K_AMP); });
        step_diag(ell, ell * config.Delta, m);
        Eigen::MatrixXd G = sample_goe(n, rng);
        Y.noalias() += (config.Delta / nn) * (m * m.transpose());
        Y += sd * G;
    }
    double T = b2 + config.L * config.Delta;
    Eigen::VectorXd m =
        call_oracle(config.L, [&] { return matrix_drift_vector(Y, T, prior, config.K_AMP); });
    step_diag(config.L, config.L * config.Delta, m);
    // The final matrix m m^T / n is rank one: lambda_1 = |m|^2 / n, v_1 = m / |m|.
    double lambda1 = m.squaredNorm() / nn;
    if (!(lambda1 > 0.0))
        fail(Errc::NonpositiveTopEigenvalue, "final drift matrix has no positive eigenvalue");
    Eigen::VectorXd v1 = m / m.norm();
    Eigen::VectorXd theta = std::sqrt(nn * lambda1) * v1;
    if (prior.is_symmetric())
        rec.sign_used = rng.sign();
    else
        rec.sign_used = sign_from_characteristic(prior, std::sqrt(nn) * v1, 1.0);
    if (rec.sign_used < 0)
        theta = -theta;
    project(theta, config);
    rec.theta_alg = std::move(theta);
    return rec;
}

} // namespace locsampler
