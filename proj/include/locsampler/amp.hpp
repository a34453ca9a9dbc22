#ifndef LOCSAMPLER_AMP_HPP
#define LOCSAMPLER_AMP_HPP

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "locsampler/priors.hpp"
#include "locsampler/state_evolution.hpp"

namespace locsampler {

struct AmpTraceRow {
    int k;
    double norm_sq_over_n;
    double overlap_over_n;  // NaN without ground truth
    double se_prediction;
};

struct AmpState {
    int k = 0;
    Eigen::VectorXd m_hat;
    Eigen::VectorXd m_hat_prev;
    Eigen::VectorXd z;       // spiked / matrix iterate
    Eigen::VectorXd a;       // linear: n-dimensional iterate
    Eigen::VectorXd b;       // linear: p-dimensional iterate
    Eigen::VectorXd s_hat;   // conditional second moments
    std::vector<AmpTraceRow> trace;
};

// z^{k+1} = beta X m^k + y - b^k m^{k-1}, m^k = F(z^k; gamma^k), m^{-1} = 0.
// gamma0 defaults to beta^2 - 1 (spectral start); with gamma0 = t and nu = y the
// iteration starts from the side channel alone.
AmpState amp_spiked(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double t, double beta,
                    const Prior& prior, int K, const Eigen::VectorXd& nu,
                    std::optional<double> gamma0 = std::nullopt,
                    const Eigen::VectorXd* theta = nullptr);

// Column-batched version: Y and the result are n x R, nu is n x 1 or n x R.
Eigen::MatrixXd amp_spiked_batch(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double t,
                                 double beta, const Prior& prior, int K, const Eigen::MatrixXd& nu,
                                 std::optional<double> gamma0 = std::nullopt);

// z^{k+1} = Y m^k - b~^k m^{k-1} with alpha~^0 = t - 1, alpha~^{k+1} = t (1 - mmse(alpha~^k)).
AmpState amp_matrix(const Eigen::MatrixXd& Y, double t, const Prior& prior, int K,
                    const Eigen::VectorXd& nu_t, const Eigen::VectorXd* theta = nullptr);

// Sign test from the imaginary part of the characteristic function.
// snr is the coefficient a in nu_i ~ a theta_i + noise.
int sign_from_characteristic(const Prior& prior, const Eigen::VectorXd& nu, double snr);
int sign_align(const Prior& prior, double beta, const Eigen::VectorXd& nu);

AmpState amp_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y0, const Prior& prior,
                    double sigma2, double delta, int K, const Eigen::VectorXd* theta = nullptr);

AmpState amp_linear_side(const Eigen::MatrixXd& X, const Eigen::VectorXd& y0,
                         const Eigen::VectorXd& z_side, double t, const Prior& prior, double sigma2,
                         double delta, int K, const Eigen::VectorXd* theta = nullptr);

} // namespace locsampler

#endif
