#pragma once

#include <stdexcept>
#include <string>

namespace resgrid {

// Tolerance used for the per-slot balance identities
// (renewable split sums to supply, essential demand fully covered).
inline constexpr double kBalanceTol = 1e-9;

/// Scenario/config file is structurally or semantically invalid.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Essential demand exceeds renewable supply plus grid capacity at some slot.
struct InfeasibleScenarioError : std::runtime_error {
    int slot;
    InfeasibleScenarioError(int t, const std::string& what)
        : std::runtime_error(what), slot(t) {}
};

/// The scheduler reached a decision branch that requires a sell price above
/// the buy price. Only possible when the price schedule violates p >= gamma.
struct PricingViolationError : std::runtime_error {
    explicit PricingViolationError(const std::string& what) : std::runtime_error(what) {}
};

/// Run summaries fed to a comparison do not share scenario/seed.
struct ComparisonError : std::runtime_error {
    explicit ComparisonError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace resgrid
