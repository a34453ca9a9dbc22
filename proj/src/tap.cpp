#include "locsampler/tap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "locsampler/error.hpp"
#include "locsampler/state_evolution.hpp"

namespace locsampler {

TapSpikedProblem make_tap_spiked(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double beta,
                                 double t, const Prior& prior)
{
    if (X.rows() != X.cols() || y.size() != X.rows())
        fail(Errc::DimensionMismatch, "TAP problem dimensions disagree");
    TapSpikedProblem pb;
    pb.X = &X;
    pb.y = y;
    pb.beta = beta;
    pb.t = t;
    pb.prior = prior;
    pb.q = q_spiked(prior, beta, t);
    pb.w = beta * beta * pb.q + t;
    return pb;
}

TapSpikedEval f_tap_spiked(const TapSpikedProblem& pb, const Eigen::VectorXd& m,
                           const Eigen::VectorXd* lambda_start)
{
    const Eigen::Index n = m.size();
    if (n != pb.X->rows())
        fail(Errc::DimensionMismatch, "TAP point has the wrong dimension");
    Eigen::VectorXd Xm = pb.X->selfadjointView<Eigen::Lower>() * m;
    const double b2 = pb.beta * pb.beta;
    TapSpikedEval ev;
    ev.lambda.resize(n);
    double hsum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double start = lambda_start ? (*lambda_start)(i) : 0.0;
        LegendreUni h = legendre_h_univariate(pb.prior, m(i), pb.w, start);
        ev.lambda(i) = h.lambda;
        hsum += h.value;
    }
    ev.value = -0.5 * pb.beta * m.dot(Xm) + 0.5 * b2 * (1.0 - pb.q) * m.squaredNorm() + hsum -
               pb.y.dot(m);
    ev.grad = -pb.beta * Xm + b2 * (1.0 - pb.q) * m - pb.y + ev.lambda;
    return ev;
}

TangentBasis::TangentBasis(const Eigen::VectorXd& m) : n_(m.size())
{
    double nm = m.norm();
    if (!(nm > 0.0))
        fail(Errc::ZeroVector, "tangent basis needs a nonzero point");
    v_ = m / nm;
    double s = v_(0) >= 0 ? 1.0 : -1.0;
    v_(0) += s;
    vnorm2_ = v_.squaredNorm();
}

Eigen::VectorXd TangentBasis::apply(const Eigen::VectorXd& w) const
{
    if (w.size() != n_ - 1)
        fail(Errc::DimensionMismatch, "tangent coordinates have the wrong dimension");
    Eigen::VectorXd x(n_);
    x(0) = 0.0;
    x.tail(n_ - 1) = w;
    double c = 2.0 * v_.tail(n_ - 1).dot(w) / vnorm2_;
    x -= c * v_;
    return x;
}

Eigen::VectorXd TangentBasis::apply_transpose(const Eigen::VectorXd& x) const
{
    if (x.size() != n_)
        fail(Errc::DimensionMismatch, "ambient vector has the wrong dimension");
    double c = 2.0 * v_.dot(x) / vnorm2_;
    return x.tail(n_ - 1) - c * v_.tail(n_ - 1);
}

TangentBasis tangent_basis(const Eigen::VectorXd& m)
{
    return TangentBasis(m);
}

Eigen::VectorXd sphere_retraction(const Eigen::VectorXd& m, const TangentBasis& T,
                                  const Eigen::VectorXd& w, double radius)
{
    if (w.squaredNorm() == 0.0)
        return m;
    Eigen::VectorXd u = m + T.apply(w);
    return (radius / u.norm()) * u;
}

Eigen::VectorXd sphere_retraction(const Eigen::VectorXd& m, const Eigen::VectorXd& w, double radius)
{
    return sphere_retraction(m, TangentBasis(m), w, radius);
}

Eigen::VectorXd tangent_gradient(const Eigen::VectorXd& m, const TangentBasis& T,
                                 const Eigen::VectorXd& w, double radius,
                                 const Eigen::VectorXd& euclidean_grad)
{
    Eigen::VectorXd u = m + T.apply(w);
    double nu = u.norm();
    Eigen::VectorXd uh = u / nu;
    Eigen::VectorXd g = euclidean_grad - uh.dot(euclidean_grad) * uh;
    return T.apply_transpose((radius / nu) * g);
}

Eigen::VectorXd tangent_gd(const TapSpikedProblem& pb, const Eigen::VectorXd& m_init, int K_GD,
                           double zeta, std::vector<OptTraceRow>* trace)
{
    const Eigen::Index n = m_init.size();
    double nm = m_init.norm();
    if (!(nm > 0.0))
        fail(Errc::ZeroVector, "tangent descent needs a nonzero start");
    const double radius = std::sqrt(static_cast<double>(n) * pb.q);
    Eigen::VectorXd m0 = (radius / nm) * m_init;
    if (K_GD == 0 && !trace)
        return m0;
    TangentBasis T(m0);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n - 1);
    Eigen::VectorXd cur = m0;
    TapSpikedEval ev = f_tap_spiked(pb, cur);
    Eigen::VectorXd gw = tangent_gradient(m0, T, w, radius, ev.grad);
    const double nn = static_cast<double>(n);
    if (trace)
        trace->push_back({0, ev.value, gw.squaredNorm() / nn, 0.0});
    for (int i = 0; i < K_GD; ++i) {
        double step = zeta;
        bool ok = false;
        for (int half = 0; half <= 30; ++half) {
            Eigen::VectorXd wn = w - step * gw;
            Eigen::VectorXd mn = sphere_retraction(m0, T, wn, radius);
            try {
                TapSpikedEval en = f_tap_spiked(pb, mn, &ev.lambda);
                w = wn;
                cur = mn;
                ev = std::move(en);
                ok = true;
                break;
            } catch (const Error& e) {
                if (e.code() != Errc::OutOfDomain)
                    throw;
                step *= 0.5;
            }
        }
        if (!ok)
            fail(Errc::OutOfDomain, "tangent step left the domain after 30 halvings");
        gw = tangent_gradient(m0, T, w, radius, ev.grad);
        if (trace)
            trace->push_back({i + 1, ev.value, gw.squaredNorm() / nn, step});
    }
    return cur;
}

// ---------------------------------------------------------------------------

LinearProblem make_linear_problem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y0, double sigma2,
                                  std::shared_ptr<const Eigen::MatrixXd> gram)
{
    if (y0.size() != X.rows())
        fail(Errc::DimensionMismatch, "response length differs from design rows");
    require(sigma2 > 0.0, Errc::InvalidArgument, "noise variance must be positive");
    LinearProblem pb;
    pb.X = &X;
    pb.gram = std::move(gram);
    if (pb.gram && (pb.gram->rows() != X.cols() || pb.gram->cols() != X.cols()))
        fail(Errc::DimensionMismatch, "Gram matrix has the wrong size");
    pb.y0 = y0;
    pb.Xty = X.transpose() * y0;
    pb.yty = y0.squaredNorm();
    pb.sigma2 = sigma2;
    pb.n = X.rows();
    pb.p = X.cols();
    return pb;
}

TapLinearState tap_linear_state_from_natural(const Prior& prior, const Eigen::VectorXd& lambda,
                                             const Eigen::VectorXd& gamma)
{
    TapLinearState st;
    const Eigen::Index p = lambda.size();
    st.lambda = lambda;
    st.gamma = gamma;
    st.m.resize(p);
    st.s.resize(p);
    st.v.resize(p);
    st.log_mgf.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        TiltEval t = tilt(prior, lambda(j), gamma(j));
        st.m(j) = t.mean;
        st.s(j) = t.second_moment;
        st.v(j) = t.variance;
        st.log_mgf(j) = t.log_mgf;
        if (!(t.variance > 0.0))
            fail(Errc::OutOfGamma, "tilted variance underflows");
    }
    return st;
}

TapLinearState make_tap_linear_state(const Prior& prior, const Eigen::VectorXd& m,
                                     const Eigen::VectorXd& s)
{
    if (m.size() != s.size())
        fail(Errc::DimensionMismatch, "moment vectors differ in length");
    const Eigen::Index p = m.size();
    const double eps = 1e-6;
    Eigen::VectorXd lam(p), gam(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        double mj = m(j);
        if (prior.is_discrete()) {
            double pad = 1e-9 * (prior.upper() - prior.lower());
            mj = std::clamp(mj, prior.lower() + pad, prior.upper() - pad);
        }
        double sj = mj * mj + std::max(eps, s(j) - mj * mj);
        if (prior.is_discrete() && prior.atoms().size() > 2) {
            // Support in [a, b] forces E[(theta - a)(theta - b)] < 0.
            double a = prior.lower(), b = prior.upper();
            double smax = (a + b) * mj - a * b;
            if (sj >= smax)
                sj = mj * mj + 0.999 * (smax - mj * mj);
        }
        LegendreBi d = legendre_h_bivariate(prior, mj, sj);
        lam(j) = d.lambda;
        gam(j) = d.gamma;
    }
    return tap_linear_state_from_natural(prior, lam, gam);
}

namespace {

// Returns F and fills gradients; the KL part is evaluated from the natural parameters.
double tap_linear_value(const LinearProblem& pb, const TapLinearState& st, const SideChannel* side,
                        Eigen::VectorXd* grad_m, Eigen::VectorXd* grad_s)
{
    const double nn = static_cast<double>(pb.n), pp = static_cast<double>(pb.p);
    const double s2 = pb.sigma2;
    const double spread = st.v.sum() / pp;  // S - Q
    double denom = s2 + spread;
    if (!(denom > 0.0))
        fail(Errc::NonpositiveVariance, "sigma2 + S - Q must be positive");
    double D = (st.lambda.array() * st.m.array() - 0.5 * st.gamma.array() * st.s.array() -
                st.log_mgf.array())
                   .sum();
    Eigen::VectorXd resid_corr;  // X^T (y - X m)
    double rss;
    if (pb.gram) {
        Eigen::VectorXd Gm = (*pb.gram) * st.m;
        resid_corr = pb.Xty - Gm;
        rss = pb.yty - 2.0 * st.m.dot(pb.Xty) + st.m.dot(Gm);
    } else {
        Eigen::VectorXd r = pb.y0 - (*pb.X) * st.m;
        rss = r.squaredNorm();
        resid_corr = pb.X->transpose() * r;
    }
    double value = 0.5 * nn * std::log(2.0 * std::numbers::pi * s2) + D + rss / (2.0 * s2) +
                   0.5 * nn * std::log1p(spread / s2);
    if (grad_m) {
        *grad_m = st.lambda - resid_corr / s2 - (nn / pp / denom) * st.m;
        *grad_s = Eigen::VectorXd::Constant(pb.p, -0.0) - 0.5 * st.gamma;
        grad_s->array() += 0.5 * (nn / pp) / denom;
    }
    if (side) {
        double t = side->t;
        if (side->z.size() != pb.p)
            fail(Errc::DimensionMismatch, "side channel has the wrong dimension");
        require(t > 0.0, Errc::InvalidArgument, "side channel time must be positive");
        if (!side->drop_quadratic)
            value += (side->z - t * st.m).squaredNorm() / (2.0 * t);
        value += 0.5 * t * pp * spread;
        if (grad_m) {
            if (side->drop_quadratic)
                *grad_m -= t * st.m;
            else
                *grad_m -= side->z;
            grad_s->array() += 0.5 * t;
        }
    }
    return value;
}

} // namespace

TapLinearEval f_tap_linear(const LinearProblem& pb, const TapLinearState& st, const SideChannel* side)
{
    if (st.m.size() != pb.p || st.s.size() != pb.p || st.v.size() != pb.p)
        fail(Errc::DimensionMismatch, "TAP state has the wrong dimension");
    for (Eigen::Index j = 0; j < pb.p; ++j)
        if (!(st.v(j) > 0.0))
            fail(Errc::OutOfGamma, "state leaves the moments' set");
    TapLinearEval ev;
    ev.value = tap_linear_value(pb, st, side, &ev.grad_m, &ev.grad_s);
    return ev;
}

TapLinearState ngd_linear(const LinearProblem& pb, const Prior& prior, const TapLinearState& init,
                          int K_NGD, double eta, const SideChannel* side,
                          std::vector<OptTraceRow>* trace)
{
    require(K_NGD >= 0 && eta >= 0.0, Errc::InvalidArgument, "NGD needs K >= 0 and eta >= 0");
    TapLinearState st = init;
    if (eta == 0.0 || K_NGD == 0)
        return st;
    TapLinearEval ev = f_tap_linear(pb, st, side);
    const double pp = static_cast<double>(pb.p);
    if (trace)
        trace->push_back({0, ev.value, (ev.grad_m.squaredNorm() + ev.grad_s.squaredNorm()) / pp, 0.0});
    for (int k = 0; k < K_NGD; ++k) {
        double step = eta;
        bool accepted = false;
        bool stalled = true;
        for (int half = 0; half <= 30; ++half) {
            Eigen::VectorXd lam = st.lambda - step * ev.grad_m;
            Eigen::VectorXd gam = st.gamma + 2.0 * step * ev.grad_s;
            TapLinearState cand;
            double value;
            try {
                cand = tap_linear_state_from_natural(prior, lam, gam);
                value = tap_linear_value(pb, cand, side, nullptr, nullptr);
            } catch (const Error&) {
                step *= 0.5;
                stalled = false;
                continue;
            }
            if (value <= ev.value) {
                st = std::move(cand);
                ev = f_tap_linear(pb, st, side);
                accepted = true;
                break;
            }
            if (std::abs(value - ev.value) > 1e-11 * std::max(1.0, std::abs(ev.value)))
                stalled = false;
            step *= 0.5;
        }
        if (!accepted) {
            // Every trial changed F only at rounding level: the iterate is stationary.
            if (stalled)
                break;
            fail(Errc::StepRejected, "free energy increased for 30 consecutive halvings");
        }
        if (trace)
            trace->push_back(
                {k + 1, ev.value, (ev.grad_m.squaredNorm() + ev.grad_s.squaredNorm()) / pp, step});
    }
    return st;
}

} // namespace locsampler
