#pragma once

#include <span>
#include <vector>

#include "setsim/types.hpp"

namespace setsim {

// Packing of a holding into combinations of k distinct resource types.
// combos[k-1] is the number of k-type combinations; for N = 3 that is
// singles, pairs, triples.
struct ValueBreakdown {
    std::vector<Units> combos;
    Points total_points{0};

    Units singles() const { return combos.size() > 0 ? combos[0] : 0; }
    Units pairs() const { return combos.size() > 1 ? combos[1] : 0; }
    Units triples() const { return combos.size() > 2 ? combos[2] : 0; }

    bool operator==(const ValueBreakdown&) const = default;
};

// Greedy tiering: take as many all-type combinations as possible, then the
// widest combinations of what remains, and so on. For sorted quantities
// x1 <= x2 <= x3 this is r3*x1 + r2*(x2-x1) + r1*(x3-x2).
//
// Coefficients must be strictly increasing and positive
// (CoefficientOrderViolation) and number exactly N.
ValueBreakdown holding_value(const ResourceVector& holding, std::span<const Points> coefficients);

enum class DeliveryClass { UnderDelivered, Exact, OverDelivered };

std::string to_string(DeliveryClass c);
DeliveryClass classify_breach(std::int64_t signed_breach) noexcept;

struct BreachRecord {
    int round{0};
    AgentId debtor;
    AgentId creditor;
    ResourceVector promised;
    ResourceVector delivered;
    std::int64_t signed_breach{0};

    DeliveryClass delivery_class() const noexcept { return classify_breach(signed_breach); }
    bool operator==(const BreachRecord&) const = default;
};

// Sum over types of promised - delivered. Positive means under-delivery.
std::int64_t compute_breach(const ResourceVector& promised, const ResourceVector& delivered);

// Human-study payout: 10 base plus V/6. Full precision; round at display.
double compensation(Points total_value);

}  // namespace setsim
