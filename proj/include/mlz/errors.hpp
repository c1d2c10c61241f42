#pragma once

#include <stdexcept>
#include <string>

namespace mlz {

/// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Hamiltonian evaluated at t = 0 while a 1/t term is present.
class SingularTime : public Error {
public:
    using Error::Error;
};

/// A complex-time path passed too close to a gap closure without a side choice.
class BranchAmbiguity : public Error {
public:
    using Error::Error;
};

/// Two coupled diabatic levels have equal slopes (or a slope left its domain).
class DegenerateSlopes : public Error {
public:
    using Error::Error;
};

/// Order reduction requested for a family with complex couplings.
class ComplexCouplingUnsupported : public Error {
public:
    using Error::Error;
};

/// A deformation parameter hits a pole of the slope/coupling map.
class DeformationSingular : public Error {
public:
    using Error::Error;
};

/// Effective Coulomb reduction requested with no coupling to the fast level.
class DegenerateReduction : public Error {
public:
    using Error::Error;
};

/// Closed-form exponents left the real branch treated by the solution.
class ComplexExponents : public Error {
public:
    using Error::Error;
};

/// Scattering probabilities failed the two-window consistency check.
class NotConverged : public Error {
public:
    using Error::Error;
};

/// Adaptive integration drove the step size below the representable floor.
class StepUnderflow : public Error {
public:
    using Error::Error;
};

/// A scenario file failed schema or invariant validation.
class ValidationError : public Error {
public:
    using Error::Error;
};

} // namespace mlz
