#ifndef LOCSAMPLER_ERROR_HPP
#define LOCSAMPLER_ERROR_HPP

#include <stdexcept>
#include <string>

namespace locsampler {

enum class Errc {
    InvalidArgument,
    DimensionMismatch,
    ZeroSecondMoment,
    NumericalUnderflow,
    DivergentIntegral,
    OutOfDomain,
    NoConvergence,
    OutOfGamma,
    SubcriticalBeta,
    SubcriticalTime,
    BelowBulkEdge,
    NonpositiveGamma,
    NonpositiveVariance,
    NonpositiveTopEigenvalue,
    SymmetricPrior,
    WeakCharacteristic,
    ZeroVector,
    StepRejected,
    OracleFailure,
    BudgetExceeded,
    OutOfRange,
    NonIntegerOverlap,
};

const char* errc_name(Errc c);

// Validation errors are caller mistakes; everything else is numerical.
bool is_validation_error(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what);
    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

inline void require(bool ok, Errc code, const char* what)
{
    if (!ok)
        fail(code, what);
}

} // namespace locsampler

#endif
