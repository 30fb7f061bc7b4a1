#pragma once

#include <stdexcept>
#include <string>

namespace qtomo {

/// Precondition or domain violation reported by any qtomo routine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A floating-point chain produced a value that the math says cannot occur
/// (negative probability, non-PSD element that was asserted PSD, ...).
class NumericalIntegrityError : public Error {
public:
    using Error::Error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw Error(what);
}

}  // namespace qtomo
