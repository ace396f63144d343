#pragma once

#include <stdexcept>
#include <string>

namespace gmclab {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define GMCLAB_ERROR_TYPE(Name)                                              \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {}  \
    };

GMCLAB_ERROR_TYPE(DomainError)
GMCLAB_ERROR_TYPE(InterpolationRangeError)
GMCLAB_ERROR_TYPE(NonconvergenceError)
GMCLAB_ERROR_TYPE(NotPositiveDefinite)
GMCLAB_ERROR_TYPE(SynthesisAccuracyError)
GMCLAB_ERROR_TYPE(ResolutionError)
GMCLAB_ERROR_TYPE(OverflowError)
GMCLAB_ERROR_TYPE(OutOfPhaseError)
GMCLAB_ERROR_TYPE(DataError)
GMCLAB_ERROR_TYPE(ConfigError)

#undef GMCLAB_ERROR_TYPE

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw DomainError(msg);
}

}  // namespace gmclab
