#pragma once
// CSV field formatting. Doubles use the shortest representation that parses
// back to the same bits, so emitted files are stable across reruns.

#include <charconv>
#include <string>

namespace afcm {

inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace afcm
