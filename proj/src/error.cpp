#include "locsampler/error.hpp"

namespace locsampler {

const char* errc_name(Errc c)
{
    switch (c) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ZeroSecondMoment: return "ZeroSecondMoment";
    case Errc::NumericalUnderflow: return "NumericalUnderflow";
    case Errc::DivergentIntegral: return "DivergentIntegral";
    case Errc::OutOfDomain: return "OutOfDomain";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::OutOfGamma: return "OutOfGamma";
    case Errc::SubcriticalBeta: return "SubcriticalBeta";
    case Errc::SubcriticalTime: return "SubcriticalTime";
    case Errc::BelowBulkEdge: return "BelowBulkEdge";
    case Errc::NonpositiveGamma: return "NonpositiveGamma";
    case Errc::NonpositiveVariance: return "NonpositiveVariance";
    case Errc::NonpositiveTopEigenvalue: return "NonpositiveTopEigenvalue";
    case Errc::SymmetricPrior: return "SymmetricPrior";
    case Errc::WeakCharacteristic: return "WeakCharacteristic";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::StepRejected: return "StepRejected";
    case Errc::OracleFailure: return "OracleFailure";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NonIntegerOverlap: return "NonIntegerOverlap";
    }
    return "Unknown";
}

bool is_validation_error(Errc c)
{
    switch (c) {
    case Errc::InvalidArgument:
    case Errc::DimensionMismatch:
    case Errc::SubcriticalBeta:
    case Errc::SubcriticalTime:
    case Errc::SymmetricPrior:
    case Errc::BudgetExceeded:
    case Errc::ZeroSecondMoment:
        return true;
    default:
        return false;
    }
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code)
{
}

void fail(Errc code, const std::string& what)
{
    throw Error(code, what);
}

} // namespace locsampler
