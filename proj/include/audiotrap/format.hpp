#pragma once

#include <charconv>
#include <string>

namespace audiotrap {

/// Shortest decimal form that round-trips to the same double. Keeps CSV and
/// SVG output byte-stable across runs.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace audiotrap
