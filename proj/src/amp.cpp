#include "locsampler/amp.hpp"

#include <cmath>
#include <limits>

#include "locsampler/error.hpp"

namespace locsampler {

namespace {

struct SpikedSchedule {
    std::vector<double> gammas;
    std::vector<double> onsager;
};

SpikedSchedule spiked_schedule(const Prior& prior, double beta, double t, int K,
                               std::optional<double> gamma0)
{
    SpikedSETrace tr = run_se_spiked(prior, beta, t, K, gamma0);
    return {tr.gammas, tr.onsager};
}

void denoise_block(const Prior& prior, const Eigen::MatrixXd& z, double gamma, Eigen::MatrixXd& out)
{
    out.resize(z.rows(), z.cols());
    denoise_n(prior, z.data(), z.size(), gamma, out.data());
}

// Shared recursion for the vector and matrix AMPs: z^{k+1} = c M m^k + Y - b^k m^{k-1}.
template <typename Hook>
Eigen::MatrixXd run_rank_one_amp(const Eigen::MatrixXd& M, double c, const Eigen::MatrixXd* Y,
                                 const SpikedSchedule& sched, const Eigen::MatrixXd& Z0,
                                 const Prior& prior, int K, Eigen::MatrixXd* prev_out,
                                 Eigen::MatrixXd* z_out, Hook&& hook)
{
    Eigen::MatrixXd z = Z0;
    Eigen::MatrixXd m, prev = Eigen::MatrixXd::Zero(Z0.rows(), Z0.cols());
    Eigen::MatrixXd mz(Z0.rows(), Z0.cols());
    denoise_block(prior, z, sched.gammas[0], m);
    hook(0, m);
    for (int k = 0; k < K; ++k) {
        if (m.cols() == 1)
            mz.noalias() = M.selfadjointView<Eigen::Lower>() * m;
        else
            mz.noalias() = M * m;
        z = c * mz - sched.onsager[k] * prev;
        if (Y)
            z += *Y;
        prev.swap(m);
        denoise_block(prior, z, sched.gammas[k + 1], m);
        hook(k + 1, m);
    }
    if (prev_out)
        *prev_out = prev;
    if (z_out)
        *z_out = z;
    return m;
}

} // namespace

AmpState amp_spiked(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double t, double beta,
                    const Prior& prior, int K, const Eigen::VectorXd& nu, std::optional<double> gamma0,
                    const Eigen::VectorXd* theta)
{
    const Eigen::Index n = X.rows();
    if (X.cols() != n || y.size() != n || nu.size() != n || (theta && theta->size() != n))
        fail(Errc::DimensionMismatch, "amp_spiked dimensions disagree");
    require(K >= 0 && t >= 0.0, Errc::InvalidArgument, "amp_spiked needs K >= 0, t >= 0");
    SpikedSchedule sched = spiked_schedule(prior, beta, t, K, gamma0);
    AmpState st;
    auto hook = [&](int k, const Eigen::MatrixXd& m) {
        double nn = static_cast<double>(n);
        double ov = theta ? m.col(0).dot(*theta) / nn : std::numeric_limits<double>::quiet_NaN();
        st.trace.push_back({k, m.col(0).squaredNorm() / nn, ov, 1.0 - mmse(prior, sched.gammas[k])});
    };
    Eigen::MatrixXd Ym = y;
    Eigen::MatrixXd prev, z;
    Eigen::MatrixXd m = run_rank_one_amp(X, beta, &Ym, sched, nu, prior, K, &prev, &z, hook);
    st.k = K;
    st.m_hat = m.col(0);
    st.m_hat_prev = prev.col(0);
    st.z = z.col(0);
    return st;
}

Eigen::MatrixXd amp_spiked_batch(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double t,
                                 double beta, const Prior& prior, int K, const Eigen::MatrixXd& nu,
                                 std::optional<double> gamma0)
{
    const Eigen::Index n = X.rows();
    if (X.cols() != n || Y.rows() != n || nu.rows() != n || (nu.cols() != 1 && nu.cols() != Y.cols()))
        fail(Errc::DimensionMismatch, "amp_spiked_batch dimensions disagree");
    SpikedSchedule sched = spiked_schedule(prior, beta, t, K, gamma0);
    Eigen::MatrixXd Z0 = nu.cols() == Y.cols() ? nu : nu.col(0).replicate(1, Y.cols());
    return run_rank_one_amp(X, beta, &Y, sched, Z0, prior, K, nullptr, nullptr,
                            [](int, const Eigen::MatrixXd&) {});
}

AmpState amp_matrix(const Eigen::MatrixXd& Y, double t, const Prior& prior, int K,
                    const Eigen::VectorXd& nu_t, const Eigen::VectorXd* theta)
{
    if (!(t > 1.0))
        fail(Errc::SubcriticalTime, "matrix AMP needs t > 1");
    const Eigen::Index n = Y.rows();
    if (Y.cols() != n || nu_t.size() != n || (theta && theta->size() != n))
        fail(Errc::DimensionMismatch, "amp_matrix dimensions disagree");
    SpikedSchedule sched = spiked_schedule(prior, std::sqrt(t), 0.0, K, t - 1.0);
    AmpState st;
    auto hook = [&](int k, const Eigen::MatrixXd& m) {
        double nn = static_cast<double>(n);
        double ov = theta ? m.col(0).dot(*theta) / nn : std::numeric_limits<double>::quiet_NaN();
        st.trace.push_back({k, m.col(0).squaredNorm() / nn, ov, 1.0 - mmse(prior, sched.gammas[k])});
    };
    Eigen::MatrixXd prev, z;
    Eigen::MatrixXd m = run_rank_one_amp(Y, 1.0, nullptr, sched, nu_t, prior, K, &prev, &z, hook);
    st.k = K;
    st.m_hat = m.col(0);
    st.m_hat_prev = prev.col(0);
    st.z = z.col(0);
    return st;
}

int sign_from_characteristic(const Prior& prior, const Eigen::VectorXd& nu, double snr)
{
    if (prior.is_symmetric())
        fail(Errc::SymmetricPrior, "sign test needs a non-symmetric prior");
    require(snr > 0.0, Errc::InvalidArgument, "sign test needs a positive signal scale");
    double best_t = 0.0, best_im = 0.0;
    for (int j = 1; j <= 500; ++j) {
        double t0 = j * 0.02 / snr;
        double im = char_fn_imag(prior, snr * t0);
        if (std::abs(im) > std::abs(best_im)) {
            best_im = im;
            best_t = t0;
        }
    }
    if (std::abs(best_im) < 1e-6)
        fail(Errc::WeakCharacteristic, "characteristic function is nearly real on the grid");
    double T = (best_t * nu.array()).sin().mean();
    if (best_im < 0)
        T = -T;
    return T < 0 ? -1 : 1;
}

int sign_align(const Prior& prior, double beta, const Eigen::VectorXd& nu)
{
    if (!(beta > 1.0))
        fail(Errc::SubcriticalBeta, "sign test needs beta > 1");
    return sign_from_characteristic(prior, nu, beta * beta - 1.0);
}

namespace {

AmpState linear_amp_impl(const Eigen::MatrixXd& X, const Eigen::VectorXd& y0,
                         const Eigen::VectorXd* u, double t, const Prior& prior, double sigma2,
                         double delta, int K, const Eigen::VectorXd* theta)
{
    const Eigen::Index n = X.rows(), p = X.cols();
    if (y0.size() != n || (u && u->size() != p) || (theta && theta->size() != p))
        fail(Errc::DimensionMismatch, "linear AMP dimensions disagree");
    require(sigma2 > 0.0 && delta > 0.0 && K >= 0, Errc::InvalidArgument,
            "linear AMP needs sigma2 > 0, delta > 0, K >= 0");
    LinearSETrace se = run_se_linear(prior, delta, sigma2, t, K);
    AmpState st;
    Eigen::VectorXd f_prev = (sigma2 / (sigma2 + se.E(-1))) * y0;
    Eigen::VectorXd b = X.transpose() * f_prev;
    Eigen::VectorXd m(p), var(p), obs(p), a(n), f(n);
    for (int k = 0; k <= K; ++k) {
        obs = b / sigma2;
        if (u)
            obs += *u;
        denoise_n(prior, obs.data(), p, se.gammas[k], m.data(), var.data());
        double pp = static_cast<double>(p);
        double ov = theta ? (m - *theta).squaredNorm() / pp : std::numeric_limits<double>::quiet_NaN();
        st.trace.push_back({k, m.squaredNorm() / pp, ov, se.E(k)});
        if (k == K)
            break;
        a.noalias() = X * m;
        a -= se.eta[k] * f_prev;
        f = (sigma2 / (sigma2 + se.E(k))) * (y0 - a);
        b.noalias() = X.transpose() * f;
        b -= se.xi[k] * m;
        f_prev.swap(f);
    }
    st.k = K;
    st.m_hat = m;
    st.s_hat = var + m.cwiseProduct(m);
    st.a = a;
    st.b = b;
    return st;
}

} // namespace

AmpState amp_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y0, const Prior& prior,
                    double sigma2, double delta, int K, const Eigen::VectorXd* theta)
{
    return linear_amp_impl(X, y0, nullptr, 0.0, prior, sigma2, delta, K, theta);
}

AmpState amp_linear_side(const Eigen::MatrixXd& X, const Eigen::VectorXd& y0,
                         const Eigen::VectorXd& z_side, double t, const Prior& prior, double sigma2,
                         double delta, int K, const Eigen::VectorXd* theta)
{
    require(t >= 0.0, Errc::InvalidArgument, "side channel time must be nonnegative");
    return linear_amp_impl(X, y0, &z_side, t, prior, sigma2, delta, K, theta);
}

} // namespace locsampler
