#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "detcloud/address_space.hpp"

namespace detcloud::vm {

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Section {
    uint32_t addr = 0;
    std::vector<uint8_t> bytes;
};

// Executable image. Container layout (little endian):
//
//   "DVM1" | entry u32 | code length u32 | code bytes | (addr u32, len u32, bytes)*
//
// The code block loads at the entry address; everything else travels in the
// trailing initial-data sections.
struct GuestProgram {
    uint32_t entry = 0;
    std::vector<uint8_t> code;
    std::vector<Section> data;

    std::vector<uint8_t> serialize() const;
    static GuestProgram parse(const std::vector<uint8_t>& bytes);  // throws FormatError

    void load_into(mem::AddressSpace& space) const;
    size_t image_size() const;
};

}  // namespace detcloud::vm
