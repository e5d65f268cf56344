#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "setsim/policy.hpp"

namespace setsim {

// Deterministic rule-based policies. Any randomness is drawn from
// PolicyContext::seed, so identical (ctx, seed) gives identical decisions.
//
//   pass-bot              never trades, never delivers
//   honest-reciprocator   offers even swaps of its own resource, accepts
//                         what it can afford, delivers exactly what it owes
//   proself-defector      trades like the reciprocator, delivers half
//                         (rounded down) of each promised quantity
//   tit-for-tat           delivers to each partner the fraction that partner
//                         honored toward it last round (full if no deal)
//   trust-violator[@K]    honest except it withholds everything at round K
//                         (default 10)
//   random-trader         seeded random proposals, replies and deliveries
//
// Scripted policies never over-commit: allocations are clamped to holdings.
std::unique_ptr<Policy> make_scripted_policy(std::string_view name);

std::vector<std::string> scripted_policy_names();

inline constexpr Units kScriptedTradeSize = 5;

}  // namespace setsim
