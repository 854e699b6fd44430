#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace tagnav {

// Broad failure categories, mapped to CLI exit codes (usage=1, input=2, numeric=3).
enum class ErrorKind { Usage, Input, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string msg)
        : std::runtime_error(std::move(msg)), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

#define TAGNAV_DEFINE_ERROR(Name, Kind)                                  \
    class Name : public Error {                                          \
    public:                                                              \
        explicit Name(const std::string& msg)                            \
            : Error(ErrorKind::Kind, std::string(#Name) + ": " + msg) {} \
    };

TAGNAV_DEFINE_ERROR(InvalidParameter, Usage)
TAGNAV_DEFINE_ERROR(NonFinite, Numeric)
TAGNAV_DEFINE_ERROR(BehindCamera, Numeric)
TAGNAV_DEFINE_ERROR(ParseError, Input)
TAGNAV_DEFINE_ERROR(SchemaError, Input)
TAGNAV_DEFINE_ERROR(UnknownMarkerId, Input)
TAGNAV_DEFINE_ERROR(InsufficientPoints, Numeric)
TAGNAV_DEFINE_ERROR(DegenerateConfiguration, Numeric)
TAGNAV_DEFINE_ERROR(InvalidSpec, Usage)
TAGNAV_DEFINE_ERROR(EmptyInput, Usage)
TAGNAV_DEFINE_ERROR(NonUniformSampling, Input)
TAGNAV_DEFINE_ERROR(TooFewSamples, Input)
TAGNAV_DEFINE_ERROR(EmptyTrajectory, Input)
TAGNAV_DEFINE_ERROR(DimensionMismatch, Input)
TAGNAV_DEFINE_ERROR(TooFewFrames, Input)
TAGNAV_DEFINE_ERROR(OutOfRoom, Usage)

#undef TAGNAV_DEFINE_ERROR

}  // namespace tagnav
