#include "locsampler/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "locsampler/error.hpp"

namespace locsampler {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::Index checked_count(Eigen::Index n, Eigen::Index s)
{
    double total = std::pow(static_cast<double>(s), static_cast<double>(n));
    if (total > kEnumerationBudget)
        fail(Errc::BudgetExceeded, "enumeration exceeds 2^22 configurations");
    return static_cast<Eigen::Index>(std::llround(total));
}

void check_inputs(const Eigen::MatrixXd& X, const Prior& prior,
                  const std::optional<Eigen::VectorXd>& v)
{
    if (!prior.is_discrete())
        fail(Errc::InvalidArgument, "enumeration needs a discrete prior");
    if (X.rows() != X.cols() || X.rows() < 1)
        fail(Errc::DimensionMismatch, "enumeration needs a square nonempty matrix");
    if (v && v->size() != X.rows())
        fail(Errc::DimensionMismatch, "symmetry-breaking vector has the wrong length");
}

// Visits configurations in enumeration order as an odometer, keeping Xth and
// <th, X th> up to date with rank-one corrections. Exact recomputation every
// 4096 steps bounds the accumulated rounding.
template <typename Fn>
void for_each_configuration(const Eigen::MatrixXd& X, const Eigen::ArrayXd& atoms,
                            Eigen::Index count, Fn&& fn)
{
    const Eigen::Index n = X.rows();
    const Eigen::Index s = atoms.size();
    std::vector<Eigen::Index> digit(n, 0);
    Eigen::VectorXd theta = Eigen::VectorXd::Constant(n, atoms(0));
    Eigen::VectorXd Xth = X * theta;
    double quad = theta.dot(Xth);
    for (Eigen::Index c = 0; c < count; ++c) {
        if (c > 0) {
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::Index next = digit[i] + 1 == s ? 0 : digit[i] + 1;
                double d = atoms(next) - atoms(digit[i]);
                digit[i] = next;
                quad += 2.0 * d * Xth(i) + d * d * X(i, i);
                Xth += d * X.col(i);
                theta(i) = atoms(next);
                if (next != 0)
                    break;
            }
            if ((c & 4095) == 0) {
                Xth.noalias() = X * theta;
                quad = theta.dot(Xth);
            }
        }
        fn(c, theta, quad, digit);
    }
}

} // namespace

Eigen::VectorXd ExactPosterior::configuration(Eigen::Index c) const
{
    Eigen::VectorXd th(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        th(i) = atoms(c % support_size);
        c /= support_size;
    }
    return th;
}

namespace {

// log w(th) = th^T A th / 2 + <c, th> - quartic |th|^4 - (t/2) |th|^2 + sum log pi(th_i)
ExactPosterior enumerate_quadratic(const Eigen::MatrixXd& A, const Eigen::VectorXd& c, double quartic,
                                   double t, const Prior& prior,
                                   const std::optional<Eigen::VectorXd>& symmetry_break)
{
    check_inputs(A, prior, symmetry_break);
    const Eigen::Index n = A.rows();
    if (c.size() != n)
        fail(Errc::DimensionMismatch, "tilt vector has the wrong length");
    const Eigen::ArrayXd& atoms = prior.atoms();
    const Eigen::ArrayXd& logp = prior.log_weights();
    const Eigen::Index s = atoms.size();
    const Eigen::Index count = checked_count(n, s);

    ExactPosterior post;
    post.support_size = s;
    post.n = n;
    post.atoms = atoms;
    post.log_weights.resize(count);
    double lmax = kNegInf;
    for_each_configuration(A, atoms, count,
                           [&](Eigen::Index k, const Eigen::VectorXd& th, double quad,
                               const std::vector<Eigen::Index>& digit) {
                               if (symmetry_break && th.dot(*symmetry_break) < 0.0) {
                                   post.log_weights(k) = kNegInf;
                                   return;
                               }
                               double r2 = th.squaredNorm();
                               double lw = 0.5 * quad - quartic * r2 * r2 + c.dot(th) - 0.5 * t * r2;
                               for (Eigen::Index i = 0; i < n; ++i)
                                   lw += logp(digit[i]);
                               post.log_weights(k) = lw;
                               lmax = std::max(lmax, lw);
                           });
    if (!std::isfinite(lmax))
        fail(Errc::NumericalUnderflow, "posterior has no admissible configuration");
    double Z = 0.0;
    for (Eigen::Index k = 0; k < count; ++k)
        Z += std::exp(post.log_weights(k) - lmax);
    post.log_weights.array() -= lmax + std::log(Z);

    post.mean = Eigen::VectorXd::Zero(n);
    post.marginals = Eigen::MatrixXd::Zero(n, s);
    post.pair_moments = Eigen::MatrixXd::Zero(n, n);
    post.cdf.resize(count);
    double acc = 0.0;
    for_each_configuration(A, atoms, count,
                           [&](Eigen::Index k, const Eigen::VectorXd& th, double,
                               const std::vector<Eigen::Index>& digit) {
                               double w = std::exp(post.log_weights(k));
                               acc += w;
                               post.cdf(k) = acc;
                               if (w == 0.0)
                                   return;
                               post.mean += w * th;
                               for (Eigen::Index i = 0; i < n; ++i)
                                   post.marginals(i, digit[i]) += w;
                               post.pair_moments.selfadjointView<Eigen::Lower>().rankUpdate(th, w);
                           });
    post.pair_moments = post.pair_moments.selfadjointView<Eigen::Lower>();
    // Renormalize away the rounding in the running sum so sampling is exact at the top.
    post.cdf /= acc;
    return post;
}

} // namespace

ExactPosterior enumerate_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double t,
                                   double beta, const Prior& prior,
                                   const std::optional<Eigen::VectorXd>& symmetry_break)
{
    check_inputs(X, prior, symmetry_break);
    const double n = static_cast<double>(X.rows());
    return enumerate_quadratic(beta * X, y, beta * beta / (4.0 * n), t, prior, symmetry_break);
}

ExactPosterior enumerate_linear_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y0,
                                          double sigma2, const Prior& prior)
{
    if (y0.size() != X.rows())
        fail(Errc::DimensionMismatch, "response length differs from design rows");
    require(sigma2 > 0.0, Errc::InvalidArgument, "noise variance must be positive");
    Eigen::MatrixXd A = -(X.transpose() * X) / sigma2;
    Eigen::VectorXd c = X.transpose() * y0 / sigma2;
    return enumerate_quadratic(A, c, 0.0, 0.0, prior, std::nullopt);
}

Eigen::VectorXd exact_sample(const ExactPosterior& post, Rng& rng)
{
    double u = rng.uniform();
    const double* begin = post.cdf.data();
    const double* end = begin + post.cdf.size();
    const double* it = std::upper_bound(begin, end, u);
    Eigen::Index c = std::min<Eigen::Index>(it - begin, post.cdf.size() - 1);
    return post.configuration(c);
}

ExactDriftOracle::ExactDriftOracle(const Eigen::MatrixXd& X, double beta, const Prior& prior,
                                   const std::optional<Eigen::VectorXd>& symmetry_break)
{
    check_inputs(X, prior, symmetry_break);
    n_ = X.rows();
    atoms_ = prior.atoms();
    log_prior_ = prior.log_weights();
    s_ = atoms_.size();
    count_ = checked_count(n_, s_);
    const double nn = static_cast<double>(n_);
    log_base_.resize(count_);
    norm2_.resize(count_);
    double bmax = kNegInf;
    for_each_configuration(X, atoms_, count_,
                           [&](Eigen::Index c, const Eigen::VectorXd& th, double quad,
                               const std::vector<Eigen::Index>&) {
                               double r2 = th.squaredNorm();
                               norm2_(c) = r2;
                               if (symmetry_break && th.dot(*symmetry_break) < 0.0) {
                                   log_base_(c) = kNegInf;
                                   return;
                               }
                               double b = 0.5 * beta * quad - beta * beta / (4.0 * nn) * r2 * r2;
                               log_base_(c) = b;
                               bmax = std::max(bmax, b);
                           });
    if (!std::isfinite(bmax))
        fail(Errc::NumericalUnderflow, "posterior has no admissible configuration");
    log_base_ -= bmax;
    base_ = log_base_.exp();
}

Eigen::VectorXd ExactDriftOracle::operator()(const Eigen::VectorXd& y, double t) const
{
    return batch(y, t).col(0);
}

Eigen::MatrixXd ExactDriftOracle::batch(const Eigen::MatrixXd& Y, double t) const
{
    if (Y.rows() != n_)
        fail(Errc::DimensionMismatch, "drift query has the wrong dimension");
    const Eigen::Index R = Y.cols();
    // Per-coordinate factors scaled so the largest is one; their products never overflow.
    Eigen::ArrayXXd P(count_, R);
    Eigen::ArrayXXd f(s_, R);
    auto factors = [&](Eigen::Index i) {
        for (Eigen::Index k = 0; k < s_; ++k)
            f.row(k) = Y.row(i).array() * atoms_(k) + (log_prior_(k) - 0.5 * t * atoms_(k) * atoms_(k));
        f.rowwise() -= f.colwise().maxCoeff();
        f = f.exp();
    };
    factors(0);
    P.topRows(s_) = f;
    Eigen::Index len = s_;
    for (Eigen::Index i = 1; i < n_; ++i) {
        factors(i);
        for (Eigen::Index k = s_ - 1; k >= 1; --k)
            P.middleRows(k * len, len) = P.topRows(len).rowwise() * f.row(k);
        P.topRows(len).rowwise() *= f.row(0);
        len *= s_;
    }
    P.colwise() *= base_;
    Eigen::ArrayXd Z = P.colwise().sum().transpose();

    Eigen::MatrixXd out(n_, R);
    // Most significant coordinate first: its blocks are contiguous.
    len = count_;
    Eigen::ArrayXXd acc(count_ / s_, R);
    for (Eigen::Index i = n_ - 1; i >= 0; --i) {
        len /= s_;
        Eigen::ArrayXd num = Eigen::ArrayXd::Zero(R);
        for (Eigen::Index k = 0; k < s_; ++k) {
            auto blk = P.middleRows(k * len, len);
            num += atoms_(k) * blk.colwise().sum().transpose();
            if (k == 0)
                acc.topRows(len) = blk;
            else
                acc.topRows(len) += blk;
        }
        out.row(i) = (num / Z).transpose().matrix();
        P.topRows(len) = acc.topRows(len);
    }
    for (Eigen::Index r = 0; r < R; ++r)
        if (!(Z(r) > 1e-250) || !std::isfinite(Z(r)))
            out.col(r) = slow_mean(Y.col(r), t);
    return out;
}

Eigen::VectorXd ExactDriftOracle::slow_mean(const Eigen::VectorXd& y, double t) const
{
    Eigen::ArrayXd lw = log_base_ - 0.5 * t * norm2_;
    for (Eigen::Index c = 0; c < count_; ++c) {
        Eigen::Index rest = c;
        for (Eigen::Index i = 0; i < n_; ++i) {
            Eigen::Index d = rest % s_;
            rest /= s_;
            lw(c) += y(i) * atoms_(d) + log_prior_(d);
        }
    }
    double lmax = lw.maxCoeff();
    Eigen::ArrayXd w = (lw - lmax).exp();
    w /= w.sum();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index c = 0; c < count_; ++c) {
        if (w(c) == 0.0)
            continue;
        Eigen::Index rest = c;
        for (Eigen::Index i = 0; i < n_; ++i) {
            mean(i) += w(c) * atoms_(rest % s_);
            rest /= s_;
        }
    }
    return mean;
}

std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>
exact_drift_oracle(const Eigen::MatrixXd& X, double beta, const Prior& prior,
                   const std::optional<Eigen::VectorXd>& symmetry_break)
{
    auto oracle = std::make_shared<ExactDriftOracle>(X, beta, prior, symmetry_break);
    return [oracle](const Eigen::VectorXd& y, double t) { return (*oracle)(y, t); };
}

} // namespace locsampler
