#ifndef LOCSAMPLER_STATE_EVOLUTION_HPP
#define LOCSAMPLER_STATE_EVOLUTION_HPP

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "locsampler/priors.hpp"

namespace locsampler {

struct SpikedSETrace {
    double beta = 0.0;
    double t = 0.0;
    std::vector<double> gammas;   // gamma^0 .. gamma^K
    std::vector<double> onsager;  // b^0 .. b^K
    double gamma_star = 0.0;      // limit of the recursion
    double q = 0.0;               // 1 - mmse(gamma_star)
    double gamma_global = 0.0;    // global minimizer of Phi (set by diagnose_spiked)
    std::vector<std::pair<double, double>> phi_at_fixed_points;
};

// gamma0 defaults to beta^2 - 1 (spectral start); pass t for a start from the
// side channel alone, which is also valid for beta <= 1.
SpikedSETrace run_se_spiked(const Prior& prior, double beta, double t, int K,
                            std::optional<double> gamma0 = std::nullopt);

double phi_spiked(const Prior& prior, double gamma, double beta, double t);

// Scans Phi on a grid and records all stationary points and the global minimizer.
void diagnose_spiked(const Prior& prior, SpikedSETrace& trace, double gamma_max = 0.0,
                     int points = 400);

// Memoized q_{beta,t}; uses the spectral start for beta > 1 and the side-channel
// start otherwise.
double q_spiked(const Prior& prior, double beta, double t);
double gamma_spiked(const Prior& prior, double beta, double t);

struct LinearSETrace {
    double delta = 0.0;
    double sigma2 = 0.0;
    double t = 0.0;
    std::vector<double> Es;       // E_{-1} .. E_K
    std::vector<double> gammas;   // gamma_0 .. gamma_K
    std::vector<double> xi;       // xi_0 .. xi_K
    std::vector<double> eta;      // eta_0 .. eta_K
    double E_star = 0.0;

    double E(int k) const { return Es.at(static_cast<std::size_t>(k + 1)); }
};

LinearSETrace run_se_linear(const Prior& prior, double delta, double sigma2, double t, int K);

double phi_linear(const Prior& prior, double gamma, double sigma2, double delta);

struct ScanResult {
    std::vector<double> stationary;
    std::vector<double> minimizers;
    double global_minimizer = 0.0;
    bool first_is_global = true;
};

ScanResult fixed_point_scan(const std::function<double(double)>& phi, const std::vector<double>& grid);

} // namespace locsampler

#endif
