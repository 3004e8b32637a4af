#include "detcloud/common.hpp"

#include <cstdio>

namespace detcloud {

uint64_t fnv64(std::span<const uint8_t> data) {
    Fnv64 h;
    h.bytes(data.data(), data.size());
    return h.value();
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace detcloud
