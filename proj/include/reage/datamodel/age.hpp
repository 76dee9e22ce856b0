#pragma once

#include "reage/core/error.hpp"

#include <cmath>
#include <compare>
#include <string>

namespace reage {

/// Apparent age in years, restricted to [0, 100].
class AgeValue {
public:
    static constexpr double kMin = 0.0;
    static constexpr double kMax = 100.0;

    AgeValue() = default;
    explicit AgeValue(double years) : years_(years)
    {
        if (!std::isfinite(years) || years < kMin || years > kMax)
            throw ValidationError("age " + std::to_string(years) + " outside [0, 100]");
    }

    double years() const { return years_; }
    /// years / 100, the value written into an age mask.
    double normalized() const { return years_ / kMax; }

    auto operator<=>(const AgeValue&) const = default;

private:
    double years_ = 0.0;
};

} // namespace reage
