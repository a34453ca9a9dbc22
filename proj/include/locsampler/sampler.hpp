#ifndef LOCSAMPLER_SAMPLER_HPP
#define LOCSAMPLER_SAMPLER_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "locsampler/priors.hpp"
#include "locsampler/rng.hpp"

namespace locsampler {

inline constexpr double kTimeFloor = 1e-12;

// How the spiked-model AMP drift is started at each step.
//  Spectral: z^0 = nu (scaled top eigenvector), gamma^0 = beta^2 - 1; needs beta > 1.
//  SideInformation: z^0 = y, gamma^0 = max(t, floor); valid for every beta.
enum class SpikedInit { Spectral, SideInformation };

struct SamplerConfig {
    int L = 100;
    double Delta = 0.01;
    int K_AMP = 15;
    int K_GD = 0;
    int K_NGD = 0;
    double zeta = 0.1;
    double eta = 0.5;
    std::uint64_t seed = 0;
    bool record_trajectory = false;
    std::optional<double> projection_radius;
    SpikedInit init = SpikedInit::Spectral;

    void validate() const;
};

struct StepDiagnostic {
    int ell;
    double t;
    double y_norm_over_sqrt_n;
    double m_norm_sq_over_n;
    double m1;
    double m2;
};

struct RunRecord {
    Eigen::VectorXd theta_alg;
    std::vector<Eigen::VectorXd> y_trajectory;      // L+1 entries when recorded
    std::vector<Eigen::VectorXd> drift_trajectory;  // L+1 entries, the last is the final oracle
    int sign_used = 0;                              // 0 when no sign was applied
    std::vector<StepDiagnostic> diagnostics;        // always L+1 rows
};

using DriftOracle = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>;
using BatchDriftOracle = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, double)>;

// y_0 = 0, y_{l+1} = y_l + Delta m(y_l, l Delta) + sqrt(Delta) w_{l+1};
// returns final_oracle(y_L, L Delta), projected if a radius is configured.
RunRecord localize_general(const DriftOracle& drift, const DriftOracle& final_oracle,
                           Eigen::Index dim, const SamplerConfig& config, Rng& rng);

// Runs rngs.size() independent chains side by side; chain r draws its noise from
// rngs[r] exactly as localize_general would.
std::vector<RunRecord> localize_general_batch(const BatchDriftOracle& drift,
                                              const BatchDriftOracle& final_oracle,
                                              Eigen::Index dim, const SamplerConfig& config,
                                              std::vector<Rng>& rngs);

// Spectral start shared by all runs on one instance: the scaled top eigenvector,
// sign-corrected for non-symmetric priors. Empty when init is SideInformation.
Eigen::VectorXd spiked_start(const Eigen::MatrixXd& X, double beta, const Prior& prior,
                             const SamplerConfig& config);

RunRecord sample_spiked_discrete(const Eigen::MatrixXd& X, double beta, const Prior& prior,
                                 const SamplerConfig& config, Rng& rng,
                                 const Eigen::VectorXd* nu = nullptr);

std::vector<RunRecord> sample_spiked_discrete_batch(const Eigen::MatrixXd& X, double beta,
                                                    const Prior& prior, const SamplerConfig& config,
                                                    std::vector<Rng>& rngs,
                                                    const Eigen::VectorXd* nu = nullptr);

Eigen::VectorXd round_to_support(const Eigen::VectorXd& m, const Prior& prior, Rng& rng);

RunRecord sample_spiked_continuous(const Eigen::MatrixXd& X, double beta, const Prior& prior,
                                   const SamplerConfig& config, Rng& rng,
                                   const Eigen::VectorXd* nu = nullptr);

// AMP followed by K_NGD natural-gradient steps on the TAP free energy.
Eigen::VectorXd linear_estimator(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const Prior& prior, double sigma2, double delta,
                                 const SamplerConfig& config,
                                 std::shared_ptr<const Eigen::MatrixXd> gram = nullptr);

// Localization in the response space: y_0 = y0 / sigma2, t_l = 1/sigma2 + l Delta,
// drift X m(y_l / t_l, 1 / t_l). Trajectories hold the n-dimensional y_l.
RunRecord sample_linear_high_snr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y0,
                                 const Prior& prior, double sigma2, double delta,
                                 const SamplerConfig& config, Rng& rng,
                                 std::shared_ptr<const Eigen::MatrixXd> gram = nullptr);

// Drift from natural-gradient descent on the TAP free energy with side channel (z, t).
Eigen::VectorXd linear_side_estimator(const Eigen::MatrixXd& X, const Eigen::VectorXd& y0,
                                      const Eigen::VectorXd& z, double t, const Prior& prior,
                                      double sigma2, const SamplerConfig& config,
                                      std::shared_ptr<const Eigen::MatrixXd> gram = nullptr);

RunRecord sample_linear_low_snr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y0,
                                const Prior& prior, double sigma2, double delta,
                                const SamplerConfig& config, Rng& rng,
                                std::shared_ptr<const Eigen::MatrixXd> gram = nullptr);

// M(Y; t) = m m^T / n with m from the matrix AMP started at the top eigenvector of Y.
Eigen::VectorXd matrix_drift_vector(const Eigen::MatrixXd& Y, double t, const Prior& prior, int K);

// Matrix-valued process Y_0 = beta X, Y_{l+1} = Y_l + Delta M(Y_l, l Delta + beta^2) + sqrt(Delta) W.
// y_trajectory is not recorded (n x n per step); drift_trajectory holds the vectors m.
RunRecord sample_spiked_matrix_process(const Eigen::MatrixXd& X, double beta, const Prior& prior,
                                       const SamplerConfig& config, Rng& rng);

} // namespace locsampler

#endif
