#include "locsampler/priors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

#include "locsampler/error.hpp"
#include "locsampler/quadrature.hpp"

namespace locsampler {

namespace {

constexpr int kGridPoints = 2001;
constexpr int kLocalPoints = 801;
constexpr double kTailLogRatio = 40.0;
constexpr int kCacheSize = 4096;
constexpr double kCacheLo = 1e-4;
constexpr double kCacheHi = 1e5;

std::atomic<std::uint64_t> next_prior_id{1};

double log_sum_exp(const Eigen::ArrayXd& a)
{
    double mx = a.maxCoeff();
    return mx + std::log((a - mx).exp().sum());
}

} // namespace

struct Prior::Data {
    Kind kind = Kind::Discrete;
    std::uint64_t id = 0;

    Eigen::ArrayXd atoms;
    Eigen::ArrayXd weights;
    Eigen::ArrayXd logw;

    Potential pot;
    double scale = 1.0;
    double radius = 0.0;
    Eigen::ArrayXd grid;
    Eigen::ArrayXd grid_lm;
    std::vector<double> grid_cdf;
    double h = 0.0;
    double logZ = 0.0;
    double curvature = 0.0;

    double mean = 0.0;
    double m2 = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool symmetric = false;
    bool symmetric_pair = false;  // two atoms {-b, b} with equal weights

    std::mutex cache_mu;
    std::vector<double> cache;
};

Potential double_well_potential(double kappa, double a, double b, double h)
{
    Potential p;
    p.name = "double_well";
    p.params = {kappa, a, b, h};
    p.U = [=](double x) {
        double bx = std::abs(b * x);
        double lc = bx + std::log1p(std::exp(-2.0 * bx)) - std::numbers::ln2;
        return 0.5 * kappa * x * x - a * lc - h * x;
    };
    p.dU = [=](double x) { return kappa * x - a * b * std::tanh(b * x) - h; };
    p.d2U = [=](double x) {
        double th = std::tanh(b * x);
        return kappa - a * b * b * (1.0 - th * th);
    };
    p.curvature_bound = std::max(std::abs(kappa), std::abs(kappa - a * b * b));
    return p;
}

Potential gaussian_mixture_potential(const std::vector<double>& means, const std::vector<double>& sds,
                                     const std::vector<double>& weights)
{
    require(!means.empty() && means.size() == sds.size() && means.size() == weights.size(),
            Errc::InvalidArgument, "gaussian_mixture needs matching means/sds/weights");
    for (std::size_t k = 0; k < sds.size(); ++k)
        require(sds[k] > 0 && weights[k] > 0, Errc::InvalidArgument,
                "gaussian_mixture sds and weights must be positive");
    // Returns log-responsibility-weighted pieces for component k at x.
    auto logs = [=](double x, std::vector<double>& r) {
        r.resize(means.size());
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < means.size(); ++k) {
            double u = (x - means[k]) / sds[k];
            r[k] = std::log(weights[k]) - std::log(sds[k]) - 0.5 * u * u;
            mx = std::max(mx, r[k]);
        }
        double s = 0.0;
        for (double& v : r) {
            v = std::exp(v - mx);
            s += v;
        }
        for (double& v : r)
            v /= s;
        return mx + std::log(s);
    };
    Potential p;
    p.name = "gaussian_mixture";
    for (std::size_t k = 0; k < means.size(); ++k) {
        p.params.push_back(means[k]);
        p.params.push_back(sds[k]);
        p.params.push_back(weights[k]);
    }
    p.U = [=](double x) {
        std::vector<double> r;
        return -logs(x, r);
    };
    p.dU = [=](double x) {
        std::vector<double> r;
        logs(x, r);
        double g = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k)
            g += r[k] * (x - means[k]) / (sds[k] * sds[k]);
        return g;
    };
    p.d2U = [=](double x) {
        std::vector<double> r;
        logs(x, r);
        double e1 = 0.0, e2 = 0.0, ep = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            double s2 = sds[k] * sds[k];
            double d = (x - means[k]) / s2;
            e1 += r[k] * d;
            e2 += r[k] * d * d;
            ep += r[k] / s2;
        }
        return ep - (e2 - e1 * e1);
    };
    // Curvature bound is measured on the quadrature grid when the prior is built.
    p.curvature_bound = 0.0;
    return p;
}

namespace {

void finish_discrete(Prior::Data& d)
{
    d.logw = d.weights.log();
    d.mean = (d.atoms * d.weights).sum();
    d.m2 = (d.atoms.square() * d.weights).sum();
    d.lower = d.atoms(0);
    d.upper = d.atoms(d.atoms.size() - 1);
    Eigen::Index k = d.atoms.size();
    bool sym = true;
    for (Eigen::Index i = 0; i < k; ++i) {
        if (std::abs(d.atoms(i) + d.atoms(k - 1 - i)) > 1e-12 ||
            std::abs(d.weights(i) - d.weights(k - 1 - i)) > 1e-12)
            sym = false;
    }
    d.symmetric = sym;
    d.symmetric_pair = sym && k == 2;
}

double find_radius(const Potential& pot)
{
    const double step = 0.005;
    const double span = 200.0;
    int count = static_cast<int>(2 * span / step) + 1;
    double umin = std::numeric_limits<double>::infinity();
    std::vector<double> u(count);
    for (int i = 0; i < count; ++i) {
        double x = -span + i * step;
        u[i] = pot.U(x);
        umin = std::min(umin, u[i]);
    }
    double r = 0.0;
    for (int i = 0; i < count; ++i)
        if (u[i] - umin < kTailLogRatio)
            r = std::max(r, std::abs(-span + i * step));
    require(r < span - 1.0, Errc::InvalidArgument, "potential does not confine the prior");
    return r + 0.5;
}

void finish_continuous(Prior::Data& d)
{
    const Potential& pot = d.pot;
    double R = d.radius * d.scale;
    d.h = 2.0 * R / (kGridPoints - 1);
    d.grid.resize(kGridPoints);
    d.grid_lm.resize(kGridPoints);
    std::vector<double> sw = simpson_weights(kGridPoints, d.h);
    double curv = 0.0;
    bool sym = true;
    for (int k = 0; k < kGridPoints; ++k) {
        double x = -R + k * d.h;
        if (k == kGridPoints - 1)
            x = R;
        d.grid(k) = x;
        double u = pot.U(x / d.scale);
        d.grid_lm(k) = std::log(sw[k]) - u;
        curv = std::max(curv, std::abs(pot.d2U(x / d.scale)) / (d.scale * d.scale));
        double um = pot.U(-x / d.scale);
        if (std::abs(u - um) > 1e-12 * std::max(1.0, std::abs(u)))
            sym = false;
    }
    double bound = pot.curvature_bound / (d.scale * d.scale);
    if (pot.curvature_bound > 0.0)
        require(curv <= bound * (1.0 + 1e-9) + 1e-12, Errc::InvalidArgument,
                "potential curvature exceeds its declared bound");
    d.curvature = pot.curvature_bound > 0.0 ? bound : curv;
    d.logZ = log_sum_exp(d.grid_lm);
    d.grid_lm -= d.logZ;
    Eigen::ArrayXd p = d.grid_lm.exp();
    d.mean = (p * d.grid).sum();
    d.m2 = (p * d.grid.square()).sum();
    d.lower = -R;
    d.upper = R;
    d.symmetric = sym;
    d.grid_cdf.resize(kGridPoints);
    double acc = 0.0;
    for (int k = 0; k < kGridPoints; ++k) {
        acc += p(k);
        d.grid_cdf[k] = acc;
    }
    for (double& c : d.grid_cdf)
        c /= acc;
}

} // namespace

Prior Prior::discrete(std::vector<double> atoms, std::vector<double> weights)
{
    require(atoms.size() >= 2, Errc::InvalidArgument, "discrete prior needs at least two atoms");
    require(atoms.size() == weights.size(), Errc::InvalidArgument,
            "atoms and weights differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        require(std::isfinite(atoms[i]), Errc::InvalidArgument, "atoms must be finite");
        require(weights[i] > 0.0, Errc::InvalidArgument, "weights must be strictly positive");
        if (i > 0)
            require(atoms[i] > atoms[i - 1], Errc::InvalidArgument,
                    "atoms must be strictly increasing");
        total += weights[i];
    }
    require(std::abs(total - 1.0) <= 1e-12, Errc::InvalidArgument, "weights must sum to one");
    auto d = std::make_shared<Data>();
    d->kind = Kind::Discrete;
    d->id = next_prior_id++;
    d->atoms = Eigen::Map<Eigen::ArrayXd>(atoms.data(), atoms.size());
    d->weights = Eigen::Map<Eigen::ArrayXd>(weights.data(), weights.size());
    finish_discrete(*d);
    return Prior(d);
}

Prior Prior::continuous(Potential potential, double radius)
{
    require(potential.U && potential.dU && potential.d2U, Errc::InvalidArgument,
            "continuous prior needs U, U' and U''");
    auto d = std::make_shared<Data>();
    d->kind = Kind::Continuous;
    d->id = next_prior_id++;
    d->pot = std::move(potential);
    d->scale = 1.0;
    d->radius = radius > 0.0 ? radius : find_radius(d->pot);
    finish_continuous(*d);
    return Prior(d);
}

Prior Prior::rademacher()
{
    return discrete({-1.0, 1.0}, {0.5, 0.5});
}

Prior Prior::three_point()
{
    return normalize_unit_second_moment(discrete({-1.0, 0.0, 1.0}, {0.25, 0.5, 0.25}));
}

Prior::Kind Prior::kind() const { return data_->kind; }
bool Prior::is_symmetric() const { return data_->symmetric; }
double Prior::mean() const { return data_->mean; }
double Prior::second_moment() const { return data_->m2; }
double Prior::variance() const { return std::max(0.0, data_->m2 - data_->mean * data_->mean); }
double Prior::lower() const { return data_->lower; }
double Prior::upper() const { return data_->upper; }
double Prior::support_bound() const { return std::max(std::abs(data_->lower), std::abs(data_->upper)); }
const Eigen::ArrayXd& Prior::atoms() const { return data_->atoms; }
const Eigen::ArrayXd& Prior::weights() const { return data_->weights; }
const Eigen::ArrayXd& Prior::log_weights() const { return data_->logw; }
const Potential& Prior::potential() const { return data_->pot; }
double Prior::scale() const { return data_->scale; }
double Prior::U(double theta) const { return data_->pot.U(theta / data_->scale); }
double Prior::dU(double theta) const { return data_->pot.dU(theta / data_->scale) / data_->scale; }
double Prior::d2U(double theta) const
{
    return data_->pot.d2U(theta / data_->scale) / (data_->scale * data_->scale);
}
double Prior::curvature_bound() const { return data_->curvature; }
const Eigen::ArrayXd& Prior::grid() const { return data_->grid; }
const Eigen::ArrayXd& Prior::grid_log_mass() const { return data_->grid_lm; }
double Prior::grid_step() const { return data_->h; }
double Prior::log_normalizer() const { return data_->logZ; }
std::uint64_t Prior::id() const { return data_->id; }

Prior Prior::rescaled(double factor) const
{
    require(factor > 0.0 && std::isfinite(factor), Errc::InvalidArgument,
            "rescale factor must be positive");
    if (is_discrete()) {
        std::vector<double> a(atoms().size()), w(atoms().size());
        for (Eigen::Index i = 0; i < atoms().size(); ++i) {
            a[i] = atoms()(i) * factor;
            w[i] = weights()(i);
        }
        auto d = std::make_shared<Data>();
        d->kind = Kind::Discrete;
        d->id = next_prior_id++;
        d->atoms = Eigen::Map<Eigen::ArrayXd>(a.data(), a.size());
        d->weights = Eigen::Map<Eigen::ArrayXd>(w.data(), w.size());
        finish_discrete(*d);
        return Prior(d);
    }
    auto d = std::make_shared<Data>();
    d->kind = Kind::Continuous;
    d->id = next_prior_id++;
    d->pot = data_->pot;
    d->scale = data_->scale * factor;
    d->radius = data_->radius;
    finish_continuous(*d);
    return Prior(d);
}

double Prior::sample(Rng& rng) const
{
    double u = rng.uniform();
    if (is_discrete()) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < atoms().size(); ++i) {
            acc += weights()(i);
            if (u < acc)
                return atoms()(i);
        }
        return atoms()(atoms().size() - 1);
    }
    const auto& cdf = data_->grid_cdf;
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    Eigen::Index k = std::min<Eigen::Index>(it - cdf.begin(), cdf.size() - 1);
    double c0 = k > 0 ? cdf[k - 1] : 0.0;
    double frac = cdf[k] > c0 ? (u - c0) / (cdf[k] - c0) : 0.5;
    // Cell k carries the mass of grid point k; spread it over [x_k - h/2, x_k + h/2].
    double x = grid()(k) + (frac - 0.5) * data_->h;
    return std::clamp(x, lower(), upper());
}

Eigen::VectorXd Prior::sample(Eigen::Index n, Rng& rng) const
{
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = sample(rng);
    return v;
}

std::string Prior::describe() const
{
    std::ostringstream os;
    os.precision(17);
    if (is_discrete()) {
        os << "discrete{";
        for (Eigen::Index i = 0; i < atoms().size(); ++i)
            os << (i ? ", " : "") << atoms()(i) << ":" << weights()(i);
        os << "}";
    } else {
        os << data_->pot.name << "(";
        for (std::size_t i = 0; i < data_->pot.params.size(); ++i)
            os << (i ? ", " : "") << data_->pot.params[i];
        os << ") scale " << data_->scale;
    }
    return os.str();
}

Prior normalize_unit_second_moment(const Prior& prior)
{
    double m2 = prior.second_moment();
    require(m2 > 1e-14 && std::isfinite(m2), Errc::ZeroSecondMoment,
            "prior second moment is zero");
    if (prior.is_discrete())
        return prior.rescaled(1.0 / std::sqrt(m2));
    // Quadrature moments move slightly under rescaling; iterate to 1e-10.
    Prior p = prior.rescaled(1.0 / std::sqrt(m2));
    for (int it = 0; it < 5 && std::abs(p.second_moment() - 1.0) > 1e-12; ++it)
        p = p.rescaled(1.0 / std::sqrt(p.second_moment()));
    return p;
}

// ---------------------------------------------------------------------------
// Tilted moments

namespace {

TiltEval moments_from_logs(const double* x, const double* lm, int count, double lambda, double w,
                           std::vector<double>& buf)
{
    buf.resize(count);
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < count; ++k) {
        double a = lm[k] + lambda * x[k] - 0.5 * w * x[k] * x[k];
        buf[k] = a;
        mx = std::max(mx, a);
    }
    if (!std::isfinite(mx))
        fail(Errc::NumericalUnderflow, "tilted weights are not representable");
    double s = 0.0, s1 = 0.0;
    for (int k = 0; k < count; ++k) {
        double e = std::exp(buf[k] - mx);
        buf[k] = e;
        s += e;
        s1 += e * x[k];
    }
    double mean = s1 / s;
    double v = 0.0;
    for (int k = 0; k < count; ++k) {
        double d = x[k] - mean;
        v += buf[k] * d * d;
    }
    v /= s;
    double m2 = v + mean * mean;
    double c12 = 0.0, v2 = 0.0;
    for (int k = 0; k < count; ++k) {
        double d = x[k] - mean;
        double q = x[k] * x[k] - m2;
        c12 += buf[k] * d * q;
        v2 += buf[k] * q * q;
    }
    TiltEval t;
    t.log_mgf = mx + std::log(s);
    t.mean = mean;
    t.variance = v;
    t.second_moment = m2;
    t.cov_first_second = c12 / s;
    t.var_second = v2 / s;
    return t;
}

TiltEval tilt_continuous(const Prior& prior, double lambda, double w)
{
    const auto& d = prior.data();
    double R = d.upper;
    double edge = std::min(prior.d2U(-R), prior.d2U(R));
    if (w + edge <= 0.0)
        fail(Errc::DivergentIntegral, "tilt is not integrable: quadratic weight below -U''");
    thread_local std::vector<double> buf;
    TiltEval t = moments_from_logs(d.grid.data(), d.grid_lm.data(), static_cast<int>(d.grid.size()),
                                   lambda, w, buf);
    double h = d.h;
    thread_local std::vector<double> lx, llm;
    for (int level = 0; level < 6 && std::sqrt(t.variance) < 12.0 * h; ++level) {
        double half = 14.0 * std::max(std::sqrt(t.variance), h);
        double a = std::max(-R, t.mean - half);
        double b = std::min(R, t.mean + half);
        double hl = (b - a) / (kLocalPoints - 1);
        static const std::vector<double> unit = simpson_weights(kLocalPoints, 1.0);
        lx.resize(kLocalPoints);
        llm.resize(kLocalPoints);
        for (int k = 0; k < kLocalPoints; ++k) {
            double x = a + k * hl;
            lx[k] = x;
            llm[k] = std::log(unit[k] * hl) - prior.U(x) - d.logZ;
        }
        t = moments_from_logs(lx.data(), llm.data(), kLocalPoints, lambda, w, buf);
        h = hl;
    }
    return t;
}

TiltEval tilt_discrete(const Prior& prior, double lambda, double w)
{
    const auto& d = prior.data();
    thread_local std::vector<double> buf;
    return moments_from_logs(d.atoms.data(), d.logw.data(), static_cast<int>(d.atoms.size()), lambda,
                             w, buf);
}

} // namespace

TiltEval tilt(const Prior& prior, double lambda, double w)
{
    if (!std::isfinite(lambda) || !std::isfinite(w))
        fail(Errc::NumericalUnderflow, "tilt parameters are not finite");
    // Symmetric priors are evaluated at |lambda| so the odd moments are exactly odd.
    bool flip = prior.data().symmetric && lambda < 0.0;
    double l = flip ? -lambda : lambda;
    TiltEval t = prior.is_discrete() ? tilt_discrete(prior, l, w) : tilt_continuous(prior, l, w);
    if (flip) {
        t.mean = -t.mean;
        t.cov_first_second = -t.cov_first_second;
    }
    return t;
}

double tilt_log_mgf(const Prior& prior, double lambda, double w)
{
    return tilt(prior, lambda, w).log_mgf;
}

ChannelEval denoise(const Prior& prior, double z, double gamma)
{
    require(gamma >= 0.0, Errc::InvalidArgument, "gamma must be nonnegative");
    TiltEval t = tilt(prior, z, gamma);
    return {t.mean, t.variance, t.second_moment};
}

void denoise_n(const Prior& prior, const double* z, Eigen::Index count, double gamma, double* mean,
               double* variance)
{
    require(gamma >= 0.0, Errc::InvalidArgument, "gamma must be nonnegative");
    const auto& d = prior.data();
    if (d.kind == Prior::Kind::Discrete && d.atoms.size() == 2) {
        double a = d.atoms(0), b = d.atoms(1);
        if (d.symmetric_pair) {
            // tanh(x) = sign(x) (1 - e) / (1 + e), e = exp(-2|x|); vectorizes where std::tanh does not.
            Eigen::Map<const Eigen::ArrayXd> zin(z, count);
            Eigen::ArrayXd x = b * zin;
            if (!x.isFinite().all())
                fail(Errc::NumericalUnderflow, "denoiser input is not finite");
            Eigen::ArrayXd e = (-2.0 * x.abs()).exp();
            Eigen::ArrayXd th = x.sign() * (1.0 - e) / (1.0 + e);
            Eigen::Map<Eigen::ArrayXd>(mean, count) = b * th;
            if (variance)
                Eigen::Map<Eigen::ArrayXd>(variance, count) = 4.0 * b * b * e / (1.0 + e).square();
            return;
        }
        double off = -0.5 * gamma * (b * b - a * a) + (d.logw(1) - d.logw(0));
        for (Eigen::Index i = 0; i < count; ++i) {
            double u = z[i] * (b - a) + off;
            if (!std::isfinite(u))
                fail(Errc::NumericalUnderflow, "denoiser input is not finite");
            double s = u >= 0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
            mean[i] = a + (b - a) * s;
            if (variance)
                variance[i] = (b - a) * (b - a) * s * (1.0 - s);
        }
        return;
    }
    for (Eigen::Index i = 0; i < count; ++i) {
        TiltEval t = tilt(prior, z[i], gamma);
        mean[i] = t.mean;
        if (variance)
            variance[i] = t.variance;
    }
}

// ---------------------------------------------------------------------------
// mmse and mutual information

namespace {

double mmse_discrete(const Prior& prior, double gamma)
{
    const GaussHermite& gh = gauss_hermite_normal();
    const auto& d = prior.data();
    double sg = std::sqrt(gamma);
    std::size_t q = gh.nodes.size();
    std::vector<double> z(q), m(q), v(q);
    double total = 0.0;
    for (Eigen::Index a = 0; a < d.atoms.size(); ++a) {
        for (std::size_t k = 0; k < q; ++k)
            z[k] = gamma * d.atoms(a) + sg * gh.nodes[k];
        denoise_n(prior, z.data(), static_cast<Eigen::Index>(q), gamma, m.data(), v.data());
        double acc = 0.0;
        for (std::size_t k = 0; k < q; ++k)
            acc += gh.weights[k] * v[k];
        total += d.weights(a) * acc;
    }
    return total;
}

double mmse_continuous(const Prior& prior, double gamma)
{
    // E[F(Y)^2] with Y = gamma Theta + sqrt(gamma) G, integrated over y by the
    // trapezoid rule (exponentially accurate for the Gaussian-smoothed density).
    double R = prior.upper();
    double sg = std::sqrt(gamma);
    double lo = -gamma * R - 12.0 * sg;
    double hi = gamma * R + 12.0 * sg;
    double hy = sg / 5.0;
    long count = static_cast<long>(std::ceil((hi - lo) / hy)) + 1;
    hy = (hi - lo) / (count - 1);
    double mass = 0.0, acc = 0.0;
    double lognorm = -0.5 * std::log(2.0 * std::numbers::pi * gamma);
    for (long k = 0; k < count; ++k) {
        double y = lo + k * hy;
        TiltEval t = tilt(prior, y, gamma);
        double lp = lognorm - 0.5 * y * y / gamma + t.log_mgf;
        double p = std::exp(lp);
        mass += p;
        acc += p * t.mean * t.mean;
    }
    return prior.second_moment() - acc / mass;
}

} // namespace

double mmse_exact(const Prior& prior, double gamma)
{
    require(gamma >= 0.0 && !std::isnan(gamma), Errc::InvalidArgument, "gamma must be nonnegative");
    double var = prior.variance();
    if (gamma == 0.0)
        return var;
    if (std::isinf(gamma))
        return 0.0;
    double v = prior.is_discrete() ? mmse_discrete(prior, gamma) : mmse_continuous(prior, gamma);
    return std::clamp(v, 0.0, var);
}

double mmse(const Prior& prior, double gamma)
{
    if (prior.is_discrete() || gamma < kCacheLo || gamma > kCacheHi)
        return mmse_exact(prior, gamma);
    auto& d = const_cast<Prior::Data&>(prior.data());
    const double step = std::log(kCacheHi / kCacheLo) / (kCacheSize - 1);
    double u = std::log(gamma / kCacheLo) / step;
    int i0 = std::clamp(static_cast<int>(std::floor(u)) - 1, 0, kCacheSize - 4);
    double node[4];
    {
        std::unique_lock<std::mutex> lock(d.cache_mu);
        if (d.cache.empty())
            d.cache.assign(kCacheSize, std::numeric_limits<double>::quiet_NaN());
        for (int j = 0; j < 4; ++j)
            node[j] = d.cache[i0 + j];
    }
    for (int j = 0; j < 4; ++j) {
        if (std::isnan(node[j])) {
            node[j] = mmse_exact(prior, kCacheLo * std::exp((i0 + j) * step));
            std::unique_lock<std::mutex> lock(d.cache_mu);
            d.cache[i0 + j] = node[j];
        }
    }
    double x = u - i0;
    double out = 0.0;
    for (int j = 0; j < 4; ++j) {
        double l = 1.0;
        for (int k = 0; k < 4; ++k)
            if (k != j)
                l *= (x - k) / double(j - k);
        out += l * node[j];
    }
    return std::clamp(out, 0.0, prior.variance());
}

double mutual_info(const Prior& prior, double gamma)
{
    require(gamma >= 0.0, Errc::InvalidArgument, "gamma must be nonnegative");
    auto f = [&](double s) { return 0.5 * mmse(prior, s); };
    double total = 0.0;
    double a = 0.0;
    double b = std::min(gamma, 1.0);
    while (a < gamma) {
        total += adaptive_simpson(f, a, b, 1e-9);
        a = b;
        b = std::min(gamma, 2.0 * b);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Legendre transforms

LegendreUni legendre_h_univariate(const Prior& prior, double m, double w, double lambda_start)
{
    if (!(m > prior.lower() && m < prior.upper()))
        fail(Errc::OutOfDomain, "mean outside the attainable interval");
    auto resid = [&](double lam, double* var) {
        TiltEval t = tilt(prior, lam, w);
        if (var)
            *var = t.variance;
        return t.mean - m;
    };
    auto done = [&](double lam) { return LegendreUni{lam * m - tilt_log_mgf(prior, lam, w), lam}; };
    const auto& d = prior.data();
    if (d.symmetric_pair) {
        // Atoms {-b, b}: mean b tanh(b lambda), log-mgf log cosh(b lambda) - w b^2 / 2.
        double b = d.atoms(1);
        double lam = std::atanh(m / b) / b;
        double bl = std::abs(b * lam);
        double lc = bl + std::log1p(std::exp(-2.0 * bl)) - std::numbers::ln2;
        return {lam * m - (lc - 0.5 * w * b * b), lam};
    }
    const double tol = 1e-13 * std::max(1.0, std::abs(m));

    double x = std::isfinite(lambda_start) ? lambda_start : 0.0;
    double var = 0.0;
    double f = resid(x, &var);
    if (std::abs(f) <= tol)
        return done(x);
    // Bracket the root of the increasing map lambda -> tilted mean.
    double step = var > 0 ? std::max(1.5 * std::abs(f) / var, 1e-8) : 1.0;
    double lo, hi;
    if (f < 0) {
        lo = x;
        for (int k = 0;; ++k) {
            double trial = lo + step;
            if (resid(trial, nullptr) >= 0) {
                hi = trial;
                break;
            }
            lo = trial;
            step *= 2.0;
            if (k > 200)
                fail(Errc::NoConvergence, "could not bracket the Legendre maximizer");
        }
    } else {
        hi = x;
        for (int k = 0;; ++k) {
            double trial = hi - step;
            if (resid(trial, nullptr) <= 0) {
                lo = trial;
                break;
            }
            hi = trial;
            step *= 2.0;
            if (k > 200)
                fail(Errc::NoConvergence, "could not bracket the Legendre maximizer");
        }
    }
    if (!(x > lo && x < hi))
        x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        f = resid(x, &var);
        if (std::abs(f) <= tol)
            return done(x);
        if (f < 0)
            lo = x;
        else
            hi = x;
        if (hi - lo <= 4e-16 * std::max(1.0, std::abs(x))) {
            if (std::abs(f) <= 1e-10)
                return done(x);
            break;
        }
        double nx = var > 0 ? x - f / var : 0.5 * (lo + hi);
        if (!(nx > lo && nx < hi))
            nx = 0.5 * (lo + hi);
        x = nx;
    }
    fail(Errc::NoConvergence, "Legendre solve did not converge");
}

LegendreBi legendre_h_bivariate(const Prior& prior, double m, double s, double lambda_start,
                                double gamma_start)
{
    if (!(s > m * m))
        fail(Errc::OutOfGamma, "second moment must exceed the squared mean");
    if (prior.is_discrete() && prior.atoms().size() == 2) {
        // theta^2 is affine in theta: s is pinned by m and gamma is not identified.
        double a = prior.atoms()(0), b = prior.atoms()(1);
        if (std::abs(s - ((a + b) * m - a * b)) > 1e-9)
            fail(Errc::OutOfGamma, "two-atom prior pins the second moment");
        LegendreUni u = legendre_h_univariate(prior, m, 0.0, lambda_start);
        return {u.value, u.lambda, 0.0};
    }
    if (!(m > prior.lower() && m < prior.upper()))
        fail(Errc::OutOfGamma, "mean outside the support");
    auto objective = [&](double lam, double gam, TiltEval& t) {
        t = tilt(prior, lam, gam);
        return lam * m - 0.5 * gam * s - t.log_mgf;
    };
    double lam = lambda_start, gam = gamma_start;
    TiltEval t{};
    double g;
    try {
        g = objective(lam, gam, t);
    } catch (const Error&) {
        lam = 0.0;
        gam = 0.0;
        g = objective(lam, gam, t);
    }
    double scale = std::max(1.0, std::abs(s));
    for (int it = 0; it < 200; ++it) {
        double r1 = m - t.mean;
        double r2 = s - t.second_moment;
        if (std::abs(r1) <= 1e-13 * scale && std::abs(r2) <= 1e-13 * scale)
            return {g, lam, gam};
        // Covariance of the sufficient statistics (theta, -theta^2/2).
        double a11 = t.variance;
        double a12 = -0.5 * t.cov_first_second;
        double a22 = 0.25 * t.var_second;
        double det = a11 * a22 - a12 * a12;
        if (!(det > 1e-15 * std::max(a11 * a22, 1e-300)))
            fail(Errc::OutOfGamma, "moment map is singular");
        double g1 = r1, g2 = -0.5 * r2;
        double d1 = (a22 * g1 - a12 * g2) / det;
        double d2 = (a11 * g2 - a12 * g1) / det;
        double eta = 1.0;
        bool accepted = false;
        for (int half = 0; half < 40; ++half) {
            TiltEval tn{};
            double gn;
            try {
                gn = objective(lam + eta * d1, gam + eta * d2, tn);
            } catch (const Error&) {
                eta *= 0.5;
                continue;
            }
            double rn = std::max(std::abs(m - tn.mean), std::abs(s - tn.second_moment));
            double ro = std::max(std::abs(r1), std::abs(r2));
            if (gn >= g - 1e-14 * std::max(1.0, std::abs(g)) || rn < ro) {
                lam += eta * d1;
                gam += eta * d2;
                g = gn;
                t = tn;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) {
            if (std::abs(r1) <= 1e-10 * scale && std::abs(r2) <= 1e-10 * scale)
                return {g, lam, gam};
            fail(Errc::OutOfGamma, "dual Newton stalled; moments not attainable");
        }
        if (!std::isfinite(lam) || !std::isfinite(gam) || std::abs(lam) > 1e12 ||
            std::abs(gam) > 1e12)
            fail(Errc::OutOfGamma, "dual parameters diverge");
    }
    if (std::abs(m - t.mean) <= 1e-10 * scale && std::abs(s - t.second_moment) <= 1e-10 * scale)
        return {g, lam, gam};
    fail(Errc::OutOfGamma, "dual Newton did not converge");
}

Moments2 tilted_moments(const Prior& prior, double lambda, double gamma)
{
    TiltEval t = tilt(prior, lambda, gamma);
    return {t.mean, t.second_moment};
}

double char_fn_imag(const Prior& prior, double t)
{
    if (prior.is_discrete())
        return (prior.weights() * (t * prior.atoms()).sin()).sum();
    return (prior.grid_log_mass().exp() * (t * prior.grid()).sin()).sum();
}

} // namespace locsampler
