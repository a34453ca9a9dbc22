#include "locsampler/rng.hpp"

#include <cmath>
#include <numbers>

namespace locsampler {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t fmix64(std::uint64_t x)
{
    x ^= x >> 33;
    x *= 0xFF51AFD7ED558CCDULL;
    x ^= x >> 33;
    x *= 0xC4CEB9FE1A85EC53ULL;
    x ^= x >> 33;
    return x;
}

std::uint64_t splitmix(std::uint64_t x)
{
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : k0_(splitmix(seed ^ splitmix(stream))), k1_(splitmix(k0_ + stream * kGolden + 1))
{
}

Rng::Rng(std::uint64_t k0, std::uint64_t k1, int) : k0_(k0), k1_(k1) {}

Rng Rng::split(std::uint64_t stream) const
{
    std::uint64_t a = splitmix(k0_ ^ splitmix(stream + 0x632BE59BD9B4E019ULL));
    std::uint64_t b = splitmix(k1_ + a);
    return Rng(a, b, 0);
}

Rng::result_type Rng::at(std::uint64_t counter) const
{
    std::uint64_t x = counter * kGolden + k0_;
    x = fmix64(x);
    x += k1_;
    return fmix64(x);
}

double Rng::uniform()
{
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

void Rng::fill_normal(double* out, Eigen::Index count)
{
    for (Eigen::Index i = 0; i < count; ++i)
        out[i] = normal();
}

Eigen::VectorXd Rng::normal_vector(Eigen::Index n)
{
    Eigen::VectorXd v(n);
    fill_normal(v.data(), n);
    return v;
}

} // namespace locsampler
