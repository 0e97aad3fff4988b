#pragma once

#include <stdexcept>
#include <string>

namespace harmtheta {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// lattice construction
struct NonFullRank : Error { using Error::Error; };
struct NonIntegral : Error { using Error::Error; };
struct ConstructionMismatch : Error { using Error::Error; };

// group machinery
struct NotIsometry : Error { using Error::Error; };
struct UnfaithfulAction : Error { using Error::Error; };
struct NotClosed : Error { using Error::Error; };
struct PredicateInconsistent : Error { using Error::Error; };

// coefficient engine
struct NotInGamma : Error { using Error::Error; };
struct NonRationalResult : Error { using Error::Error; };
struct BudgetExceeded : Error { using Error::Error; };
struct AllZero : Error { using Error::Error; };

// q-series
struct NonIntegralOffset : Error { using Error::Error; };
struct UnsupportedGenusFactor : Error { using Error::Error; };

// i/o
struct ParseError : Error { using Error::Error; };

} // namespace harmtheta
