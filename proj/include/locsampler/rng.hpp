#ifndef LOCSAMPLER_RNG_HPP
#define LOCSAMPLER_RNG_HPP

#include <cstdint>
#include <limits>

#include <Eigen/Dense>

namespace locsampler {

// Counter-based generator: output i of stream (seed, id) is a keyed hash of i,
// so streams are independent of the order in which they are consumed.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    Rng split(std::uint64_t stream) const;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return at(counter_++); }
    result_type at(std::uint64_t counter) const;

    // Uniform on the open interval (0, 1).
    double uniform();
    double normal();
    int sign() { return ((*this)() >> 63) ? 1 : -1; }

    void fill_normal(double* out, Eigen::Index count);

    template <typename Derived>
    void fill_normal(Eigen::DenseBase<Derived>& out)
    {
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            for (Eigen::Index i = 0; i < out.rows(); ++i)
                out(i, j) = normal();
    }

    Eigen::VectorXd normal_vector(Eigen::Index n);

    std::uint64_t counter() const { return counter_; }

private:
    Rng(std::uint64_t k0, std::uint64_t k1, int);

    std::uint64_t k0_;
    std::uint64_t k1_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace locsampler

#endif
