#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace ghlab {

/// Shortest round-trip decimal; "nan", "inf", "-inf" for non-finite values.
inline std::string shortest(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

}  // namespace ghlab
