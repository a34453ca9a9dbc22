#ifndef LOCSAMPLER_MODEL_HPP
#define LOCSAMPLER_MODEL_HPP

#include <cstdint>

#include <Eigen/Dense>

#include "locsampler/priors.hpp"
#include "locsampler/rng.hpp"

namespace locsampler {

struct SpikedInstance {
    Eigen::Index n = 0;
    double beta = 0.0;
    Eigen::MatrixXd X;
    Eigen::VectorXd theta;
    std::uint64_t seed = 0;
};

struct LinearInstance {
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    double delta = 0.0;
    double sigma2 = 0.0;
    Eigen::MatrixXd X;
    Eigen::VectorXd theta;
    Eigen::VectorXd y0;
    std::uint64_t seed = 0;
};

// Diagonal variance 2/n, off-diagonal 1/n; assembled from the upper triangle.
Eigen::MatrixXd sample_goe(Eigen::Index n, Rng& rng);

SpikedInstance gen_spiked(const Prior& prior, double beta, Eigen::Index n, std::uint64_t seed);
LinearInstance gen_linear(const Prior& prior, double delta, double sigma2, Eigen::Index p,
                          std::uint64_t seed);

struct EigPair {
    double lambda = 0.0;
    Eigen::VectorXd v;
};

// Leading eigenpair with a deterministic sign convention (largest entry positive).
EigPair top_eigpair_canonical(const Eigen::MatrixXd& X);
// Leading eigenpair with a uniformly random sign.
EigPair top_eigpair(const Eigen::MatrixXd& X, Rng& rng);

Eigen::VectorXd spectral_init(const EigPair& top, double beta);
Eigen::VectorXd spectral_init(const Eigen::MatrixXd& X, double beta, Rng& rng);

double estimate_beta(double lambda1);

} // namespace locsampler

#endif
