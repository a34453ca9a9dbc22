#ifndef LOCSAMPLER_PRIORS_HPP
#define LOCSAMPLER_PRIORS_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "locsampler/rng.hpp"

namespace locsampler {

// U and its first two derivatives; the prior density is proportional to exp(-U).
struct Potential {
    std::string name;
    std::function<double(double)> U;
    std::function<double(double)> dU;
    std::function<double(double)> d2U;
    double curvature_bound = 0.0;
    std::vector<double> params;
};

Potential double_well_potential(double kappa, double a, double b, double h);
Potential gaussian_mixture_potential(const std::vector<double>& means,
                                     const std::vector<double>& sds,
                                     const std::vector<double>& weights);

class Prior {
public:
    enum class Kind { Discrete, Continuous };

    static Prior discrete(std::vector<double> atoms, std::vector<double> weights);
    static Prior continuous(Potential potential, double radius = 0.0);

    static Prior rademacher();
    // {-1, 0, 1} with weights {1/4, 1/2, 1/4}, normalized to atoms {-sqrt2, 0, sqrt2}.
    static Prior three_point();

    Kind kind() const;
    bool is_discrete() const { return kind() == Kind::Discrete; }
    bool is_symmetric() const;

    double mean() const;
    double second_moment() const;
    double variance() const;
    double lower() const;
    double upper() const;
    double support_bound() const;

    // Discrete data (empty for continuous priors).
    const Eigen::ArrayXd& atoms() const;
    const Eigen::ArrayXd& weights() const;
    const Eigen::ArrayXd& log_weights() const;

    // Continuous data: the variable is scale() * x with x ~ exp(-U(x)).
    const Potential& potential() const;
    double scale() const;
    double U(double theta) const;
    double dU(double theta) const;
    double d2U(double theta) const;
    double curvature_bound() const;
    // Quadrature grid with log(weight * density), normalized to total mass one.
    const Eigen::ArrayXd& grid() const;
    const Eigen::ArrayXd& grid_log_mass() const;
    double grid_step() const;
    double log_normalizer() const;

    Prior rescaled(double factor) const;
    double sample(Rng& rng) const;
    Eigen::VectorXd sample(Eigen::Index n, Rng& rng) const;

    std::uint64_t id() const;
    std::string describe() const;

    struct Data;
    const Data& data() const { return *data_; }

private:
    explicit Prior(std::shared_ptr<Data> d) : data_(std::move(d)) {}
    std::shared_ptr<Data> data_;
};

Prior normalize_unit_second_moment(const Prior& prior);

struct ChannelEval {
    double mean;
    double variance;
    double second_moment;
};

// Moments of pi_{lambda,w}(dtheta) ~ exp(lambda theta - w theta^2 / 2) pi(dtheta).
struct TiltEval {
    double log_mgf;
    double mean;
    double variance;
    double second_moment;
    double cov_first_second;  // Cov(theta, theta^2)
    double var_second;        // Var(theta^2)
};

TiltEval tilt(const Prior& prior, double lambda, double w);
double tilt_log_mgf(const Prior& prior, double lambda, double w);

ChannelEval denoise(const Prior& prior, double z, double gamma);

// Entrywise posterior mean (and optionally variance) for a block of observations.
void denoise_n(const Prior& prior, const double* z, Eigen::Index count, double gamma,
               double* mean, double* variance = nullptr);

template <typename Derived>
typename Derived::PlainObject denoise_mean(const Prior& prior, const Eigen::MatrixBase<Derived>& z,
                                           double gamma)
{
    typename Derived::PlainObject in = z;
    typename Derived::PlainObject out(in.rows(), in.cols());
    denoise_n(prior, in.data(), in.size(), gamma, out.data());
    return out;
}

double mmse(const Prior& prior, double gamma);
double mmse_exact(const Prior& prior, double gamma);
double mutual_info(const Prior& prior, double gamma);

struct LegendreUni {
    double value;
    double lambda;
};

// sup_lambda [lambda m - phi(lambda, w)]
LegendreUni legendre_h_univariate(const Prior& prior, double m, double w, double lambda_start = 0.0);

struct LegendreBi {
    double value;
    double lambda;
    double gamma;
};

// sup_{lambda,gamma} [lambda m - gamma s / 2 - phi(lambda, gamma)]
LegendreBi legendre_h_bivariate(const Prior& prior, double m, double s, double lambda_start = 0.0,
                                double gamma_start = 0.0);

struct Moments2 {
    double m;
    double s;
};

Moments2 tilted_moments(const Prior& prior, double lambda, double gamma);

double char_fn_imag(const Prior& prior, double t);

} // namespace locsampler

#endif
