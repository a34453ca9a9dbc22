#include "locsampler/state_evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "locsampler/error.hpp"

namespace locsampler {

namespace {

constexpr int kMaxFixedPointSteps = 100000;

double spiked_map(const Prior& prior, double gamma, double beta, double t)
{
    return beta * beta * (1.0 - mmse(prior, gamma)) + t;
}

} // namespace

SpikedSETrace run_se_spiked(const Prior& prior, double beta, double t, int K,
                            std::optional<double> gamma0)
{
    require(t >= 0.0 && K >= 0, Errc::InvalidArgument, "need t >= 0 and K >= 0");
    if (!gamma0 && !(beta > 1.0))
        fail(Errc::SubcriticalBeta, "spectral state evolution needs beta > 1");
    SpikedSETrace tr;
    tr.beta = beta;
    tr.t = t;
    double g = gamma0 ? *gamma0 : beta * beta - 1.0;
    for (int k = 0; k <= K; ++k) {
        tr.gammas.push_back(g);
        tr.onsager.push_back(beta * beta * mmse(prior, g));
        if (k < K)
            g = spiked_map(prior, g, beta, t);
    }
    double cur = tr.gammas.back();
    for (int it = 0; it < kMaxFixedPointSteps; ++it) {
        double next = spiked_map(prior, cur, beta, t);
        bool done = std::abs(next - cur) <= 1e-12 * std::max(1.0, std::abs(cur));
        cur = next;
        if (done)
            break;
    }
    tr.gamma_star = cur;
    tr.gamma_global = cur;
    tr.q = 1.0 - mmse(prior, cur);
    return tr;
}

double phi_spiked(const Prior& prior, double gamma, double beta, double t)
{
    require(gamma >= 0.0, Errc::InvalidArgument, "gamma must be nonnegative");
    double d = gamma - t;
    return d * d / (4.0 * beta * beta) - 0.5 * d + mutual_info(prior, gamma);
}

void diagnose_spiked(const Prior& prior, SpikedSETrace& trace, double gamma_max, int points)
{
    double b2 = trace.beta * trace.beta;
    if (gamma_max <= 0.0)
        gamma_max = 2.0 * (b2 + trace.t) + 1.0;
    double lo = std::max(trace.t, 1e-6);
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i)
        grid[i] = lo + (gamma_max - lo) * i / (points - 1);
    // Phi on the grid via cumulative I-MMSE integration instead of repeated quadrature.
    std::vector<double> phi(points);
    double I = mutual_info(prior, grid[0]);
    for (int i = 0; i < points; ++i) {
        if (i > 0) {
            double a = grid[i - 1], b = grid[i], m = 0.5 * (a + b);
            I += (b - a) / 12.0 * (mmse(prior, a) + 4.0 * mmse(prior, m) + mmse(prior, b));
        }
        double d = grid[i] - trace.t;
        phi[i] = d * d / (4.0 * b2) - 0.5 * d + I;
    }
    std::map<double, double> lookup;
    for (int i = 0; i < points; ++i)
        lookup[grid[i]] = phi[i];
    ScanResult scan = fixed_point_scan([&](double g) { return lookup.at(g); }, grid);
    trace.phi_at_fixed_points.clear();
    for (double g : scan.stationary)
        trace.phi_at_fixed_points.emplace_back(g, lookup.at(g));
    trace.gamma_global = scan.global_minimizer;
    if (scan.minimizers.size() <= 1)
        trace.gamma_global = trace.gamma_star;
}

namespace {

std::mutex q_mu;
std::map<std::tuple<std::uint64_t, long long, long long>, std::pair<double, double>> q_cache;

std::pair<double, double> spiked_constants(const Prior& prior, double beta, double t)
{
    auto key = std::make_tuple(prior.id(), std::llround(beta * 1e12), std::llround(t * 1e12));
    {
        std::lock_guard<std::mutex> lock(q_mu);
        auto it = q_cache.find(key);
        if (it != q_cache.end())
            return it->second;
    }
    std::optional<double> g0;
    if (!(beta > 1.0))
        g0 = t;
    SpikedSETrace tr = run_se_spiked(prior, beta, t, 0, g0);
    std::pair<double, double> v{tr.gamma_star, tr.q};
    std::lock_guard<std::mutex> lock(q_mu);
    q_cache[key] = v;
    return v;
}

} // namespace

double q_spiked(const Prior& prior, double beta, double t)
{
    return spiked_constants(prior, beta, t).second;
}

double gamma_spiked(const Prior& prior, double beta, double t)
{
    return spiked_constants(prior, beta, t).first;
}

LinearSETrace run_se_linear(const Prior& prior, double delta, double sigma2, double t, int K)
{
    require(delta > 0.0 && sigma2 > 0.0 && t >= 0.0 && K >= 0, Errc::InvalidArgument,
            "linear state evolution needs delta, sigma2 > 0 and t >= 0");
    LinearSETrace tr;
    tr.delta = delta;
    tr.sigma2 = sigma2;
    tr.t = t;
    double E = 1.0;
    tr.Es.push_back(E);
    for (int k = 0; k <= K; ++k) {
        double g = delta / (sigma2 + E) + t;
        E = mmse(prior, g);
        tr.gammas.push_back(g);
        tr.Es.push_back(E);
        tr.xi.push_back(-delta * sigma2 / (sigma2 + E));
        tr.eta.push_back(E / sigma2);
    }
    double cur = E;
    for (int it = 0; it < kMaxFixedPointSteps; ++it) {
        double next = mmse(prior, delta / (sigma2 + cur) + t);
        double step = std::abs(next - cur);
        cur = next;
        if (step <= 1e-17 || (step <= 1e-12 && it > 200))
            break;
    }
    tr.E_star = cur;
    return tr;
}

double phi_linear(const Prior& prior, double gamma, double sigma2, double delta)
{
    if (!(gamma > 0.0))
        fail(Errc::NonpositiveGamma, "phi_linear needs gamma > 0");
    return 0.5 * sigma2 * gamma - 0.5 * delta * std::log(gamma / (2.0 * std::numbers::pi * delta)) +
           mutual_info(prior, gamma);
}

ScanResult fixed_point_scan(const std::function<double(double)>& phi, const std::vector<double>& grid)
{
    require(grid.size() >= 2, Errc::InvalidArgument, "scan grid needs at least two points");
    std::size_t n = grid.size();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = phi(grid[i]);
    ScanResult r;
    // Sign of the forward difference on each grid interval.
    std::vector<int> sgn(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double d = v[i + 1] - v[i];
        sgn[i] = d > 0 ? 1 : (d < 0 ? -1 : 0);
    }
    if (sgn[0] > 0)
        r.minimizers.push_back(grid[0]);
    int last = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (sgn[i] == 0)
            continue;
        if (last != 0 && sgn[i] != last) {
            r.stationary.push_back(grid[i]);
            if (last < 0 && sgn[i] > 0)
                r.minimizers.push_back(grid[i]);
        }
        last = sgn[i];
    }
    if (last < 0)
        r.minimizers.push_back(grid[n - 1]);
    if (r.minimizers.empty())
        r.minimizers.push_back(grid[0]);
    double best = std::numeric_limits<double>::infinity();
    for (double g : r.minimizers) {
        double val = v[std::lower_bound(grid.begin(), grid.end(), g) - grid.begin()];
        if (val < best) {
            best = val;
            r.global_minimizer = g;
        }
    }
    r.first_is_global = r.minimizers.front() == r.global_minimizer;
    return r;
}

} // namespace locsampler
