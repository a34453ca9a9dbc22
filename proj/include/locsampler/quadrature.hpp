#ifndef LOCSAMPLER_QUADRATURE_HPP
#define LOCSAMPLER_QUADRATURE_HPP

#include <functional>
#include <vector>

namespace locsampler {

// Nodes and weights with sum_k w_k f(x_k) ~ E f(G), G ~ N(0,1).
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussHermite& gauss_hermite_normal();
GaussHermite make_gauss_hermite_normal(int order);

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, int max_depth = 40);

// Composite Simpson weights for an odd number of equally spaced points.
std::vector<double> simpson_weights(int points, double h);

} // namespace locsampler

#endif
