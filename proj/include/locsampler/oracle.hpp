#ifndef LOCSAMPLER_ORACLE_HPP
#define LOCSAMPLER_ORACLE_HPP

#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "locsampler/priors.hpp"
#include "locsampler/rng.hpp"

namespace locsampler {

inline constexpr double kEnumerationBudget = 4194304.0;  // 2^22 configurations

// Exact tilted posterior
//   exp((beta/2) <th, X th> - (beta^2 / 4n) |th|^4 + <y, th> - (t/2) |th|^2) prod pi(th_i)
// over support^n, optionally restricted to <th, v> >= 0.
// Configuration c has digits c = sum_i d_i s^i (coordinate 0 least significant).
struct ExactPosterior {
    Eigen::Index support_size = 0;
    Eigen::Index n = 0;
    Eigen::ArrayXd atoms;
    Eigen::VectorXd log_weights;  // normalized; -inf outside the half-space
    Eigen::VectorXd mean;
    Eigen::MatrixXd marginals;     // n x s
    Eigen::MatrixXd pair_moments;  // E[th_i th_j]
    Eigen::VectorXd cdf;           // cumulative mass in enumeration order

    Eigen::VectorXd configuration(Eigen::Index c) const;
};

ExactPosterior enumerate_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double t,
                                   double beta, const Prior& prior,
                                   const std::optional<Eigen::VectorXd>& symmetry_break = std::nullopt);

// Linear-model posterior exp(-|y0 - X th|^2 / (2 sigma2)) prod pi(th_j) over support^p.
ExactPosterior enumerate_linear_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y0,
                                          double sigma2, const Prior& prior);

Eigen::VectorXd exact_sample(const ExactPosterior& post, Rng& rng);

// Tilted-posterior means for many (y, t) queries on one (X, beta, prior).
// The y-independent part of the weights is computed once; each query costs a
// few passes over the configurations and runs column-batched.
class ExactDriftOracle {
public:
    ExactDriftOracle(const Eigen::MatrixXd& X, double beta, const Prior& prior,
                     const std::optional<Eigen::VectorXd>& symmetry_break = std::nullopt);

    Eigen::VectorXd operator()(const Eigen::VectorXd& y, double t) const;
    // Y is n x R; returns the n x R matrix of means.
    Eigen::MatrixXd batch(const Eigen::MatrixXd& Y, double t) const;

    Eigen::Index dim() const { return n_; }
    Eigen::Index configurations() const { return count_; }

private:
    Eigen::VectorXd slow_mean(const Eigen::VectorXd& y, double t) const;

    Eigen::Index n_;
    Eigen::Index s_;
    Eigen::Index count_;
    Eigen::ArrayXd atoms_;
    Eigen::ArrayXd log_prior_;
    Eigen::ArrayXd base_;      // exp(B_c - max B), zero outside the half-space
    Eigen::ArrayXd log_base_;  // B_c - max B, -inf outside
    Eigen::ArrayXd norm2_;     // |th_c|^2
};

std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>
exact_drift_oracle(const Eigen::MatrixXd& X, double beta, const Prior& prior,
                   const std::optional<Eigen::VectorXd>& symmetry_break = std::nullopt);

} // namespace locsampler

#endif
