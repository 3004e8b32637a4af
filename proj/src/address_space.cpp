#include "detcloud/address_space.hpp"

#include <algorithm>
#include <cassert>

namespace detcloud::mem {

namespace {
const Page kZeroPage{};
}

bool Page::is_zero() const {
    return std::all_of(words.begin(), words.end(), [](uint32_t w) { return w == 0; });
}

uint32_t AddressSpace::load32(uint32_t addr) const {
    assert((addr & 3) == 0);
    auto it = pages_.find(addr >> kPageShift);
    if (it == pages_.end()) return 0;
    return it->second->words[(addr & (kPageSize - 1)) >> 2];
}

void AddressSpace::store32(uint32_t addr, uint32_t value) {
    assert((addr & 3) == 0);
    Page* p = page_for_write(addr >> kPageShift);
    p->words[(addr & (kPageSize - 1)) >> 2] = value;
}

uint8_t AddressSpace::load8(uint32_t addr) const {
    auto it = pages_.find(addr >> kPageShift);
    if (it == pages_.end()) return 0;
    return it->second->bytes()[addr & (kPageSize - 1)];
}

void AddressSpace::read_bytes(uint32_t addr, std::span<uint8_t> out) const {
    size_t done = 0;
    while (done < out.size()) {
        uint32_t a = addr + uint32_t(done);
        uint32_t off = a & (kPageSize - 1);
        size_t chunk = std::min<size_t>(kPageSize - off, out.size() - done);
        const Page* p = page(a >> kPageShift);
        if (p)
            std::memcpy(out.data() + done, p->bytes() + off, chunk);
        else
            std::memset(out.data() + done, 0, chunk);
        done += chunk;
    }
}

void AddressSpace::write_bytes(uint32_t addr, std::span<const uint8_t> in) {
    size_t done = 0;
    while (done < in.size()) {
        uint32_t a = addr + uint32_t(done);
        uint32_t off = a & (kPageSize - 1);
        size_t chunk = std::min<size_t>(kPageSize - off, in.size() - done);
        Page* p = page_for_write(a >> kPageShift);
        std::memcpy(p->bytes() + off, in.data() + done, chunk);
        done += chunk;
    }
}

AddressSpace AddressSpace::clone() const {
    AddressSpace out(cow_enabled_);
    if (cow_enabled_) {
        out.pages_ = pages_;
    } else {
        for (const auto& [pn, p] : pages_) out.pages_.emplace(pn, std::make_shared<Page>(*p));
    }
    return out;
}

const Page* AddressSpace::page(uint32_t page_no) const {
    auto it = pages_.find(page_no);
    return it == pages_.end() ? nullptr : it->second.get();
}

Page* AddressSpace::page_for_write(uint32_t page_no) {
    auto it = pages_.find(page_no);
    if (it == pages_.end()) it = pages_.emplace(page_no, std::make_shared<Page>()).first;
    if (it->second.use_count() > 1) it->second = std::make_shared<Page>(*it->second);
    return it->second.get();
}

uint64_t AddressSpace::content_hash() const {
    Fnv64 h;
    for (const auto& [pn, p] : pages_) {
        if (p->is_zero()) continue;  // same content as an unmapped page
        h.u32(pn);
        h.bytes(p->bytes(), kPageSize);
    }
    return h.value();
}

void AddressSpace::copy_range(AddressSpace& dst, uint32_t dst_addr, const AddressSpace& src,
                              uint32_t src_addr, uint32_t len) {
    assert((dst_addr & 3) == 0 && (src_addr & 3) == 0 && (len & 3) == 0);
    uint32_t done = 0;
    while (done < len) {
        uint32_t d = dst_addr + done;
        uint32_t s = src_addr + done;
        uint32_t d_off = d & (kPageSize - 1);
        uint32_t s_off = s & (kPageSize - 1);
        uint32_t chunk = std::min(kPageSize - d_off, kPageSize - s_off);
        chunk = std::min(chunk, len - done);

        const Page* sp = src.page(s >> kPageShift);
        if (chunk == kPageSize) {
            // aligned full page: share the mapping (or drop it when the
            // source page is absent, which reads back as zeros either way)
            uint32_t dpn = d >> kPageShift;
            auto it = src.pages_.find(s >> kPageShift);
            if (it == src.pages_.end())
                dst.pages_.erase(dpn);
            else if (dst.cow_enabled_)
                dst.pages_[dpn] = it->second;
            else
                dst.pages_[dpn] = std::make_shared<Page>(*it->second);
            done += chunk;
            continue;
        }
        if (!sp) {
            if (const Page* dp = dst.page(d >> kPageShift); dp != nullptr) {
                Page* w = dst.page_for_write(d >> kPageShift);
                std::memset(w->bytes() + d_off, 0, chunk);
            }
        } else {
            Page* w = dst.page_for_write(d >> kPageShift);
            std::memmove(w->bytes() + d_off, sp->bytes() + s_off, chunk);
        }
        done += chunk;
    }
}

}  // namespace detcloud::mem
