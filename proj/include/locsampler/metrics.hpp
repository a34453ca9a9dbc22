#ifndef LOCSAMPLER_METRICS_HPP
#define LOCSAMPLER_METRICS_HPP

#include <vector>

#include <Eigen/Dense>

namespace locsampler {

// Law of an integer overlap on {-k, -k+2, ..., k}; probs[j] is the mass of -k + 2j.
struct OverlapPmf {
    int k = 0;
    std::vector<double> probs;

    int value(std::size_t j) const { return -k + 2 * static_cast<int>(j); }
    double mean() const;
};

// (beta / 2n) <theta, X theta>
double normalized_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta, double beta);

// Law of Z_1 + ... + Z_k for independent signs with E Z_i = m_i^2.
OverlapPmf theoretical_overlap_pmf(const Eigen::VectorXd& m_hat_prefix);

// Histogram of <theta_{<=k}, sample_{<=k}> over samples with entries in {-1, +1}.
OverlapPmf empirical_overlap_pmf(const std::vector<Eigen::VectorXd>& samples,
                                 const Eigen::VectorXd& theta, int k = 10);

double tv_distance(const OverlapPmf& p, const OverlapPmf& q);

// Exact W2 between two empirical laws on the line (quantile coupling).
double w2_1d(std::vector<double> a, std::vector<double> b);

} // namespace locsampler

#endif
