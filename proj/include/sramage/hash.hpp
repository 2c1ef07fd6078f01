#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

namespace sramage {

inline uint64_t fnv1a(const std::string& text) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::string fnv1a_hex(const std::string& text) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(text)));
    return buf;
}

}
