#pragma once

#include <stdexcept>
#include <string>

namespace pbvp {

/// Invalid argument to a library call (bad index, unordered times, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An operation needs an analytic partial, envelope or other metadata that
/// the supplied field does not declare.
class CapabilityError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Declared hypotheses of a solver are violated.
class PreconditionError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A non-finite value appeared while integrating.
class NumericalOverflow : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

/// x - psi(phi_1(x)) has no sign change inside the bracket cap.
class NoFixedPoint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The fixed-point residual vanishes on a whole interval.
class MultipleSolutions : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace pbvp
