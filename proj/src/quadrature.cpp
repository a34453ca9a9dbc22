#include "locsampler/quadrature.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "locsampler/error.hpp"

namespace locsampler {

GaussHermite make_gauss_hermite_normal(int order)
{
    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        J(k, k - 1) = std::sqrt(static_cast<double>(k));
        J(k - 1, k) = J(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussHermite gh;
    gh.nodes.resize(order);
    gh.weights.resize(order);
    double total = 0.0;
    for (int k = 0; k < order; ++k) {
        gh.nodes[k] = es.eigenvalues()(k);
        double v = es.eigenvectors()(0, k);
        gh.weights[k] = v * v;
        total += gh.weights[k];
    }
    // Symmetrize to remove eigensolver round-off.
    for (int k = 0; k < order / 2; ++k) {
        int j = order - 1 - k;
        double x = 0.5 * (gh.nodes[j] - gh.nodes[k]);
        double w = 0.5 * (gh.weights[j] + gh.weights[k]);
        gh.nodes[k] = -x;
        gh.nodes[j] = x;
        gh.weights[k] = gh.weights[j] = w;
    }
    if (order % 2 == 1)
        gh.nodes[order / 2] = 0.0;
    for (double& w : gh.weights)
        w /= total;
    return gh;
}

const GaussHermite& gauss_hermite_normal()
{
    static const GaussHermite gh = make_gauss_hermite_normal(61);
    return gh;
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth)
{
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = f(lm);
    double frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, int max_depth)
{
    if (b == a)
        return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Coarse pass fixes the scale for the relative tolerance.
    double scale = std::abs(whole);
    for (int i = 1; i < 8; ++i)
        scale = std::max(scale, std::abs(f(a + (b - a) * i / 8.0) * (b - a)));
    double tol = rel_tol * std::max(scale, 1e-300);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

std::vector<double> simpson_weights(int points, double h)
{
    require(points >= 3 && points % 2 == 1, Errc::InvalidArgument,
            "Simpson rule needs an odd number of points");
    std::vector<double> w(points);
    for (int k = 0; k < points; ++k)
        w[k] = (k == 0 || k == points - 1) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    for (double& x : w)
        x *= h / 3.0;
    return w;
}

} // namespace locsampler
