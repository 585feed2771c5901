#pragma once

#include <heavytail/exactprob.hpp>

namespace fixtures {

inline const heavytail::Law& stretched_half() {
    static const heavytail::Law law = heavytail::make_law(heavytail::make_stretched(0.5));
    return law;
}

inline const heavytail::Law& loghazard_three() {
    static const heavytail::Law law = heavytail::make_law(heavytail::make_loghazard(3.0));
    return law;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace fixtures
