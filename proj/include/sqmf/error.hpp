#pragma once

#include <stdexcept>
#include <string>

namespace sqmf {

/// Bad shapes, out-of-range parameters, malformed files. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite objectives, failed decompositions. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ValidationError(what);
}

}  // namespace sqmf
