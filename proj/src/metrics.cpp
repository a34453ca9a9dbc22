#include "locsampler/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "locsampler/error.hpp"

namespace locsampler {

double OverlapPmf::mean() const
{
    double s = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j)
        s += probs[j] * value(j);
    return s;
}

double normalized_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta, double beta)
{
    if (X.rows() != X.cols() || X.rows() != theta.size())
        fail(Errc::DimensionMismatch, "log-likelihood dimensions disagree");
    const double n = static_cast<double>(theta.size());
    return beta / (2.0 * n) * theta.dot(X.selfadjointView<Eigen::Lower>() * theta);
}

OverlapPmf theoretical_overlap_pmf(const Eigen::VectorXd& m_hat_prefix)
{
    const int k = static_cast<int>(m_hat_prefix.size());
    // dist[j] = P(number of +1 among the processed signs = j)
    std::vector<double> dist{1.0};
    for (int i = 0; i < k; ++i) {
        double mu = m_hat_prefix(i) * m_hat_prefix(i);
        if (!(mu <= 1.0))
            fail(Errc::OutOfRange, "overlap mean exceeds one");
        double up = 0.5 * (1.0 + mu), down = 0.5 * (1.0 - mu);
        std::vector<double> next(dist.size() + 1, 0.0);
        for (std::size_t j = 0; j < dist.size(); ++j) {
            next[j] += down * dist[j];
            next[j + 1] += up * dist[j];
        }
        dist.swap(next);
    }
    return {k, dist};
}

OverlapPmf empirical_overlap_pmf(const std::vector<Eigen::VectorXd>& samples,
                                 const Eigen::VectorXd& theta, int k)
{
    require(k >= 1 && theta.size() >= k, Errc::InvalidArgument, "overlap prefix exceeds dimension");
    require(!samples.empty(), Errc::InvalidArgument, "no samples");
    OverlapPmf pmf{k, std::vector<double>(k + 1, 0.0)};
    for (const Eigen::VectorXd& s : samples) {
        if (s.size() < k)
            fail(Errc::DimensionMismatch, "sample shorter than the overlap prefix");
        double ov = 0.0;
        for (int i = 0; i < k; ++i) {
            if (std::abs(s(i)) != 1.0 || std::abs(theta(i)) != 1.0)
                fail(Errc::NonIntegerOverlap, "overlap inputs must be +-1");
            ov += s(i) * theta(i);
        }
        pmf.probs[static_cast<std::size_t>((std::lround(ov) + k) / 2)] += 1.0;
    }
    for (double& p : pmf.probs)
        p /= static_cast<double>(samples.size());
    return pmf;
}

double tv_distance(const OverlapPmf& p, const OverlapPmf& q)
{
    if (p.k != q.k || p.probs.size() != q.probs.size())
        fail(Errc::DimensionMismatch, "pmfs have different supports");
    double s = 0.0;
    for (std::size_t j = 0; j < p.probs.size(); ++j)
        s += std::abs(p.probs[j] - q.probs[j]);
    return 0.5 * s;
}

double w2_1d(std::vector<double> a, std::vector<double> b)
{
    require(!a.empty() && !b.empty(), Errc::InvalidArgument, "W2 needs nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    // Integrate |F_a^{-1}(u) - F_b^{-1}(u)|^2 over the merged breakpoints j/na, j/nb.
    const std::size_t na = a.size(), nb = b.size();
    std::size_t i = 0, j = 0;
    double u = 0.0, acc = 0.0;
    while (i < na && j < nb) {
        double ua = static_cast<double>(i + 1) / static_cast<double>(na);
        double ub = static_cast<double>(j + 1) / static_cast<double>(nb);
        double next = std::min(ua, ub);
        double d = a[i] - b[j];
        acc += (next - u) * d * d;
        u = next;
        if (ua <= next)
            ++i;
        if (ub <= next)
            ++j;
    }
    return std::sqrt(acc);
}

} // namespace locsampler
