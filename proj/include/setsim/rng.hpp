#pragma once

#include <cstdint>
#include <initializer_list>

namespace setsim {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Sub-seed for one policy call. Each component is folded through splitmix64
// in order, so seeds depend only on (master, repetition, round, agent,
// decision kind, ordinal) and never on how many other calls were made.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept;

}  // namespace setsim
