#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emrs/harness/campaign.hpp"
#include "emrs/harness/report.hpp"
#include "emrs/harness/scenario.hpp"

namespace emrs::harness {

/// Mode visiting order that covers each of the 12 ordered mode pairs exactly once.
std::vector<LocomotionMode> mode_transition_circuit();

/// Criteria with safety-derived bounds filled in.
Criteria resolve_criteria(const TestCase& tc, const ScenarioSet& scenario);

/// Drives the case's scripted commands through the closed loop and scores it.
/// Deterministic in (case, scenario, seed).
CaseResult run_case(const TestCase& tc, const ScenarioSet& scenario, std::uint64_t seed);

/// The mode-matrix case on the flat bed, optionally with a stalled steering actuator.
CaseResult mode_matrix_case(const ScenarioSet& scenario, std::uint64_t seed,
                            std::optional<StallInjection> inject = std::nullopt);

/// Runs all cases (or the one named `only`) with the campaign seed unless overridden.
std::vector<CaseResult> run_campaign(const Campaign& campaign, std::optional<std::uint64_t> seed = std::nullopt,
                                     const std::optional<std::string>& only = std::nullopt);

}  // namespace emrs::harness
