#include "locsampler/model.hpp"

#include <cmath>

#include "locsampler/error.hpp"

namespace locsampler {

namespace {

constexpr std::uint64_t kThetaStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kDesignStream = 3;
constexpr Eigen::Index kDenseLimit = 256;

} // namespace

Eigen::MatrixXd sample_goe(Eigen::Index n, Rng& rng)
{
    require(n >= 1, Errc::InvalidArgument, "GOE dimension must be positive");
    Eigen::MatrixXd W(n, n);
    const double off = std::sqrt(1.0 / n);
    const double diag = std::sqrt(2.0 / n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < j; ++i)
            W(i, j) = off * rng.normal();
        W(j, j) = diag * rng.normal();
    }
    W.triangularView<Eigen::StrictlyLower>() = W.transpose();
    return W;
}

SpikedInstance gen_spiked(const Prior& prior, double beta, Eigen::Index n, std::uint64_t seed)
{
    require(beta >= 0.0, Errc::InvalidArgument, "beta must be nonnegative");
    require(n >= 1, Errc::InvalidArgument, "dimension must be positive");
    SpikedInstance inst;
    inst.n = n;
    inst.beta = beta;
    inst.seed = seed;
    Rng theta_rng(seed, kThetaStream);
    inst.theta = prior.sample(n, theta_rng);
    Rng noise_rng(seed, kNoiseStream);
    inst.X = sample_goe(n, noise_rng);
    const double c = beta / static_cast<double>(n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i <= j; ++i)
            inst.X(i, j) += c * inst.theta(i) * inst.theta(j);
    inst.X.triangularView<Eigen::StrictlyLower>() = inst.X.transpose();
    return inst;
}

LinearInstance gen_linear(const Prior& prior, double delta, double sigma2, Eigen::Index p,
                          std::uint64_t seed)
{
    require(delta > 0.0 && sigma2 > 0.0 && p >= 1, Errc::InvalidArgument,
            "linear instance needs delta > 0, sigma2 > 0, p >= 1");
    LinearInstance inst;
    inst.p = p;
    inst.n = std::max<Eigen::Index>(1, std::llround(delta * static_cast<double>(p)));
    inst.delta = static_cast<double>(inst.n) / static_cast<double>(p);
    inst.sigma2 = sigma2;
    inst.seed = seed;
    Rng theta_rng(seed, kThetaStream);
    inst.theta = prior.sample(p, theta_rng);
    Rng design_rng(seed, kDesignStream);
    inst.X.resize(inst.n, p);
    const double sx = std::sqrt(1.0 / static_cast<double>(p));
    // Row-major draw order so each row is one design vector.
    for (Eigen::Index i = 0; i < inst.n; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            inst.X(i, j) = sx * design_rng.normal();
    Rng noise_rng(seed, kNoiseStream);
    Eigen::VectorXd eps = std::sqrt(sigma2) * noise_rng.normal_vector(inst.n);
    inst.y0 = inst.X * inst.theta + eps;
    return inst;
}

namespace {

void canonical_sign(Eigen::VectorXd& v)
{
    Eigen::Index k = 0;
    v.cwiseAbs().maxCoeff(&k);
    if (v(k) < 0)
        v = -v;
}

EigPair dense_top(const Eigen::MatrixXd& X)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X);
    if (es.info() != Eigen::Success)
        fail(Errc::NoConvergence, "dense eigensolver failed");
    Eigen::Index n = X.rows();
    return {es.eigenvalues()(n - 1), es.eigenvectors().col(n - 1)};
}

// Restarted Lanczos with full reorthogonalization for the largest eigenvalue.
EigPair lanczos_top(const Eigen::MatrixXd& X)
{
    const Eigen::Index n = X.rows();
    const Eigen::Index m = std::min<Eigen::Index>(n, 80);
    Rng start_rng(0x5EED5EEDULL, 0x7ULL);
    Eigen::VectorXd v0 = start_rng.normal_vector(n);
    v0.normalize();
    Eigen::MatrixXd V(n, m + 1);
    Eigen::VectorXd alpha(m), beta(m);
    Eigen::VectorXd w(n), proj;
    double norm_est = 0.0;
    for (int restart = 0; restart < 200; ++restart) {
        V.col(0) = v0;
        Eigen::Index k = 0;
        for (Eigen::Index j = 0; j < m; ++j) {
            w.noalias() = X.selfadjointView<Eigen::Lower>() * V.col(j);
            alpha(j) = V.col(j).dot(w);
            for (int pass = 0; pass < 2; ++pass) {
                proj.noalias() = V.leftCols(j + 1).transpose() * w;
                w.noalias() -= V.leftCols(j + 1) * proj;
            }
            beta(j) = w.norm();
            k = j + 1;
            norm_est = std::max(norm_est, std::abs(alpha(j)) + beta(j));
            if (beta(j) <= 1e-13 * std::max(norm_est, 1e-300))
                break;
            V.col(j + 1) = w / beta(j);
        }
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
        for (Eigen::Index j = 0; j < k; ++j) {
            T(j, j) = alpha(j);
            if (j + 1 < k)
                T(j, j + 1) = T(j + 1, j) = beta(j);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        double theta = es.eigenvalues()(k - 1);
        Eigen::VectorXd s = es.eigenvectors().col(k - 1);
        Eigen::VectorXd ritz = V.leftCols(k) * s;
        ritz.normalize();
        Eigen::VectorXd r = X.selfadjointView<Eigen::Lower>() * ritz - theta * ritz;
        double xnorm = std::max(norm_est, es.eigenvalues().cwiseAbs().maxCoeff());
        if (r.norm() <= 1e-9 * xnorm)
            return {theta, ritz};
        v0 = ritz;
    }
    fail(Errc::NoConvergence, "Lanczos exceeded its restart budget");
}

} // namespace

EigPair top_eigpair_canonical(const Eigen::MatrixXd& X)
{
    require(X.rows() == X.cols() && X.rows() >= 1, Errc::DimensionMismatch,
            "eigensolver needs a square matrix");
    EigPair e = X.rows() <= kDenseLimit ? dense_top(X) : lanczos_top(X);
    canonical_sign(e.v);
    return e;
}

EigPair top_eigpair(const Eigen::MatrixXd& X, Rng& rng)
{
    EigPair e = top_eigpair_canonical(X);
    if (rng.sign() < 0)
        e.v = -e.v;
    return e;
}

Eigen::VectorXd spectral_init(const EigPair& top, double beta)
{
    if (!(beta > 1.0))
        fail(Errc::SubcriticalBeta, "spectral initialization needs beta > 1");
    double n = static_cast<double>(top.v.size());
    return std::sqrt(n * beta * beta * (beta * beta - 1.0)) * top.v.normalized();
}

Eigen::VectorXd spectral_init(const Eigen::MatrixXd& X, double beta, Rng& rng)
{
    if (!(beta > 1.0))
        fail(Errc::SubcriticalBeta, "spectral initialization needs beta > 1");
    return spectral_init(top_eigpair(X, rng), beta);
}

double estimate_beta(double lambda1)
{
    if (!(lambda1 > 2.0))
        fail(Errc::BelowBulkEdge, "top eigenvalue is inside the bulk");
    return 0.5 * (lambda1 + std::sqrt(lambda1 * lambda1 - 4.0));
}

} // namespace locsampler
