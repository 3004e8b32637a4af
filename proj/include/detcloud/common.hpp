#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace detcloud {

// Guest machine word. All guest memory, registers and arithmetic are 32-bit.
using Word = uint32_t;

constexpr uint32_t kPageSize = 4096;
constexpr uint32_t kPageWords = kPageSize / 4;
constexpr uint32_t kPageShift = 12;

// FNV-1a, the fingerprint used by every determinism check. Not cryptographic:
// divergence diagnosis always falls back to full event logs.
class Fnv64 {
public:
    Fnv64& bytes(const void* data, size_t n) {
        const auto* p = static_cast<const uint8_t*>(data);
        for (size_t i = 0; i < n; i++) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ull;
        }
        return *this;
    }
    Fnv64& u32(uint32_t v) {
        uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
        return bytes(b, 4);
    }
    Fnv64& u64(uint64_t v) { return u32(uint32_t(v)).u32(uint32_t(v >> 32)); }
    Fnv64& str(std::string_view s) { return u64(s.size()).bytes(s.data(), s.size()); }
    uint64_t value() const { return h_; }

private:
    uint64_t h_ = 0xcbf29ce484222325ull;
};

uint64_t fnv64(std::span<const uint8_t> data);
std::string hex64(uint64_t v);

// splitmix64, used to derive per-run seeds from a master seed.
uint64_t mix64(uint64_t x);

}  // namespace detcloud
