#include "detcloud/program.hpp"

#include <cstring>

namespace detcloud::vm {

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 24));
}

uint32_t get_u32(const std::vector<uint8_t>& in, size_t off) {
    return uint32_t(in[off]) | uint32_t(in[off + 1]) << 8 | uint32_t(in[off + 2]) << 16 |
           uint32_t(in[off + 3]) << 24;
}

}  // namespace

std::vector<uint8_t> GuestProgram::serialize() const {
    std::vector<uint8_t> out;
    out.insert(out.end(), {'D', 'V', 'M', '1'});
    put_u32(out, entry);
    put_u32(out, uint32_t(code.size()));
    out.insert(out.end(), code.begin(), code.end());
    for (const auto& s : data) {
        put_u32(out, s.addr);
        put_u32(out, uint32_t(s.bytes.size()));
        out.insert(out.end(), s.bytes.begin(), s.bytes.end());
    }
    return out;
}

GuestProgram GuestProgram::parse(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "DVM1", 4) != 0)
        throw FormatError("not a DVM1 image");
    GuestProgram p;
    p.entry = get_u32(bytes, 4);
    uint32_t code_len = get_u32(bytes, 8);
    size_t off = 12;
    if (off + code_len > bytes.size()) throw FormatError("truncated code section");
    p.code.assign(bytes.begin() + off, bytes.begin() + off + code_len);
    off += code_len;
    while (off < bytes.size()) {
        if (off + 8 > bytes.size()) throw FormatError("truncated section header");
        Section s;
        s.addr = get_u32(bytes, off);
        uint32_t len = get_u32(bytes, off + 4);
        off += 8;
        if (off + len > bytes.size()) throw FormatError("truncated section data");
        s.bytes.assign(bytes.begin() + off, bytes.begin() + off + len);
        off += len;
        if (uint64_t(s.addr) + len > (1ull << 32)) throw FormatError("section beyond 32-bit space");
        p.data.push_back(std::move(s));
    }
    if (uint64_t(p.entry) + p.code.size() > (1ull << 32)) throw FormatError("code beyond 32-bit space");
    if (p.entry & 3) throw FormatError("entry not 4-aligned");
    return p;
}

void GuestProgram::load_into(mem::AddressSpace& space) const {
    space.write_bytes(entry, code);
    for (const auto& s : data) space.write_bytes(s.addr, s.bytes);
}

size_t GuestProgram::image_size() const {
    size_t n = code.size();
    for (const auto& s : data) n += s.bytes.size();
    return n;
}

}  // namespace detcloud::vm
