#ifndef LOCSAMPLER_TAP_HPP
#define LOCSAMPLER_TAP_HPP

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "locsampler/priors.hpp"

namespace locsampler {

struct TapSpikedProblem {
    const Eigen::MatrixXd* X = nullptr;
    Eigen::VectorXd y;
    double beta = 0.0;
    double t = 0.0;
    double q = 0.0;
    double w = 0.0;  // quadratic tilt inside h: beta^2 q + t
    Prior prior = Prior::rademacher();
};

TapSpikedProblem make_tap_spiked(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double beta,
                                 double t, const Prior& prior);

struct TapSpikedEval {
    double value;
    Eigen::VectorXd grad;
    Eigen::VectorXd lambda;
};

TapSpikedEval f_tap_spiked(const TapSpikedProblem& problem, const Eigen::VectorXd& m,
                           const Eigen::VectorXd* lambda_start = nullptr);

// Columns 2..n of the Householder reflector sending m/|m| to a coordinate axis.
class TangentBasis {
public:
    explicit TangentBasis(const Eigen::VectorXd& m);
    Eigen::Index dim() const { return n_ - 1; }
    Eigen::VectorXd apply(const Eigen::VectorXd& w) const;            // T w
    Eigen::VectorXd apply_transpose(const Eigen::VectorXd& x) const;  // T^T x

private:
    Eigen::VectorXd v_;
    double vnorm2_;
    Eigen::Index n_;
};

TangentBasis tangent_basis(const Eigen::VectorXd& m);

Eigen::VectorXd sphere_retraction(const Eigen::VectorXd& m, const TangentBasis& T,
                                  const Eigen::VectorXd& w, double radius);
Eigen::VectorXd sphere_retraction(const Eigen::VectorXd& m, const Eigen::VectorXd& w, double radius);

struct OptTraceRow {
    int step;
    double value;
    double grad_norm_sq_over_n;
    double step_size;
};

// Gradient of w -> F(phi_m(w)) at w.
Eigen::VectorXd tangent_gradient(const Eigen::VectorXd& m, const TangentBasis& T,
                                 const Eigen::VectorXd& w, double radius,
                                 const Eigen::VectorXd& euclidean_grad);

Eigen::VectorXd tangent_gd(const TapSpikedProblem& problem, const Eigen::VectorXd& m_init, int K_GD,
                           double zeta, std::vector<OptTraceRow>* trace = nullptr);

// Linear model ------------------------------------------------------------

struct LinearProblem {
    const Eigen::MatrixXd* X = nullptr;
    std::shared_ptr<const Eigen::MatrixXd> gram;  // X^T X, optional
    Eigen::VectorXd y0;
    Eigen::VectorXd Xty;
    double yty = 0.0;
    double sigma2 = 1.0;
    Eigen::Index n = 0;
    Eigen::Index p = 0;
};

LinearProblem make_linear_problem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y0, double sigma2,
                                  std::shared_ptr<const Eigen::MatrixXd> gram = nullptr);

struct TapLinearState {
    Eigen::VectorXd m;
    Eigen::VectorXd s;
    Eigen::VectorXd v;  // s - m^2, carried separately since it can fall below rounding of s
    Eigen::VectorXd lambda;
    Eigen::VectorXd gamma;
    Eigen::VectorXd log_mgf;
};

// Solves the dual problem per coordinate; infeasible s is nudged into the moments' set.
TapLinearState make_tap_linear_state(const Prior& prior, const Eigen::VectorXd& m,
                                     const Eigen::VectorXd& s);
TapLinearState tap_linear_state_from_natural(const Prior& prior, const Eigen::VectorXd& lambda,
                                             const Eigen::VectorXd& gamma);

struct SideChannel {
    Eigen::VectorXd z;
    double t = 0.0;
    bool drop_quadratic = false;
};

struct TapLinearEval {
    double value;
    Eigen::VectorXd grad_m;
    Eigen::VectorXd grad_s;
};

TapLinearEval f_tap_linear(const LinearProblem& problem, const TapLinearState& state,
                           const SideChannel* side = nullptr);

TapLinearState ngd_linear(const LinearProblem& problem, const Prior& prior, const TapLinearState& init,
                          int K_NGD, double eta, const SideChannel* side = nullptr,
                          std::vector<OptTraceRow>* trace = nullptr);

} // namespace locsampler

#endif
