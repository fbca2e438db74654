#pragma once

#include <stdexcept>
#include <string>

namespace fph {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PoleError : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };
struct RateError : Error { using Error::Error; };
struct SingularMassError : Error { using Error::Error; };
struct ImpactSingularityError : Error { using Error::Error; };
struct ActuationError : Error { using Error::Error; };
struct IntegrationError : Error { using Error::Error; };
struct EventError : Error { using Error::Error; };
struct UnreachableError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct WindowError : Error { using Error::Error; };

}  // namespace fph
