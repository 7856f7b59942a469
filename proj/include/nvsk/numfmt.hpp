#pragma once

#include <cstdio>
#include <string>

namespace nvsk {

/// Shortest "%.9g" rendering; the serialization precision of every artifact.
inline std::string format_g9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace nvsk
