#pragma once

#include <stdexcept>
#include <string>

namespace exttilt {

/// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A constructor or operation received a parameter outside its stated range.
struct invalid_parameter : error {
    using error::error;
};

/// An integral failed to converge (tail of the integrand does not decay).
struct non_integrable : error {
    using error::error;
};

/// Argument outside the domain of a monotone inverse (e.g. u below range of h).
struct out_of_domain : error {
    using error::error;
};

/// Requested mean level is at or below the untilted mean; no positive tilt exists.
struct below_mean : error {
    using error::error;
};

/// A chain stage requires a mean level the model cannot reach.
struct infeasible_chain : error {
    using error::error;
};

/// Monte Carlo slab acceptance fell below the usable floor.
struct insufficient_acceptance : error {
    using error::error;
};

/// A numerical oracle could not certify its own accuracy.
struct oracle_failure : error {
    using error::error;
};

} // namespace exttilt
