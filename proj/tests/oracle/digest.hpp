#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace oracle {

// 64-bit FNV-1a, printed as 16 hex digits. Used to freeze oracle images.
inline std::string fnv1a64_hex(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace oracle
