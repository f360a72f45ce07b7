#pragma once

#include <stdexcept>

namespace swipt {

// Requested operating point lies outside the achievable region.
struct InfeasibleTarget : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative search exhausted its iteration budget.
struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A bracketed root solve was invoked on an interval without a sign change;
// usually signals a misclassified state upstream.
struct NoRootInBracket : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The mode-switching threshold equation did not produce the crossings needed
// to meet the requested target.
struct NoRootPair : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A brute-force check refused an ensemble larger than its guardrail.
struct GuardrailExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace swipt
