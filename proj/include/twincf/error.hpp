#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace twincf {

// Base class for all domain errors. `kind()` is a stable machine-readable
// tag used by the CLI's JSON error output.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define TWINCF_DEFINE_ERROR(Name)                                        \
    class Name : public Error {                                          \
    public:                                                              \
        explicit Name(const std::string& message) : Error(#Name, message) {} \
    }

TWINCF_DEFINE_ERROR(CycleDetected);
TWINCF_DEFINE_ERROR(PartialMechanism);
TWINCF_DEFINE_ERROR(BadDistribution);
TWINCF_DEFINE_ERROR(UnknownVariable);
TWINCF_DEFINE_ERROR(LatentIntervention);
TWINCF_DEFINE_ERROR(EnumerationTooLarge);
TWINCF_DEFINE_ERROR(ZeroEvidence);
TWINCF_DEFINE_ERROR(NoAcceptedSamples);
TWINCF_DEFINE_ERROR(NonBinary);
TWINCF_DEFINE_ERROR(NoMatch);
TWINCF_DEFINE_ERROR(NonFiniteLoss);
TWINCF_DEFINE_ERROR(ParseError);

#undef TWINCF_DEFINE_ERROR

}  // namespace twincf
