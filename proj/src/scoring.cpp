#include "setsim/scoring.hpp"

#include <algorithm>
#include <functional>

#include "setsim/error.hpp"

namespace setsim {

ValueBreakdown holding_value(const ResourceVector& holding, std::span<const Points> coefficients) {
    const auto n = holding.size();
    if (coefficients.size() != n) {
        fail(ErrorCode::CoefficientOrderViolation,
             "expected " + std::to_string(n) + " value coefficients, got " + std::to_string(coefficients.size()));
    }
    if (n > 0 && coefficients[0] <= 0) {
        fail(ErrorCode::CoefficientOrderViolation, "r1 > 0 fails");
    }
    for (std::size_t k = 1; k < n; ++k) {
        if (coefficients[k] <= coefficients[k - 1]) {
            fail(ErrorCode::CoefficientOrderViolation,
                 "r" + std::to_string(k + 1) + " > r" + std::to_string(k) + " fails");
        }
    }

    std::vector<Units> sorted(holding.values().begin(), holding.values().end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());

    // With quantities sorted descending x(1) >= ... >= x(n), the layer between
    // x(k+1) and x(k) holds combinations of exactly k types.
    ValueBreakdown out;
    out.combos.assign(n, 0);
    for (std::size_t k = 1; k <= n; ++k) {
        const Units upper = sorted[k - 1];
        const Units lower = k < n ? sorted[k] : 0;
        out.combos[k - 1] = upper - lower;
        out.total_points += coefficients[k - 1] * static_cast<Points>(upper - lower);
    }
    return out;
}

std::string to_string(DeliveryClass c) {
    switch (c) {
        case DeliveryClass::UnderDelivered: return "under_delivered";
        case DeliveryClass::Exact: return "exact";
        case DeliveryClass::OverDelivered: return "over_delivered";
    }
    return "";
}

DeliveryClass classify_breach(std::int64_t signed_breach) noexcept {
    if (signed_breach > 0) return DeliveryClass::UnderDelivered;
    if (signed_breach < 0) return DeliveryClass::OverDelivered;
    return DeliveryClass::Exact;
}

std::int64_t compute_breach(const ResourceVector& promised, const ResourceVector& delivered) {
    if (promised.size() != delivered.size()) {
        fail(ErrorCode::UnknownResourceType, "breach vectors differ in size");
    }
    std::int64_t sum = 0;
    for (std::size_t t = 0; t < promised.size(); ++t) {
        const auto type = static_cast<ResourceType>(t);
        sum += static_cast<std::int64_t>(promised[type]) - static_cast<std::int64_t>(delivered[type]);
    }
    return sum;
}

double compensation(Points total_value) {
    return 10.0 + static_cast<double>(total_value) / 6.0;
}

}  // namespace setsim
