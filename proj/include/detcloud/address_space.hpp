#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <span>

#include "detcloud/common.hpp"

namespace detcloud::mem {

static_assert(std::endian::native == std::endian::little,
              "guest images are little endian and read through host words");

struct Page {
    std::array<uint32_t, kPageWords> words{};

    uint8_t* bytes() { return reinterpret_cast<uint8_t*>(words.data()); }
    const uint8_t* bytes() const { return reinterpret_cast<const uint8_t*>(words.data()); }
    bool is_zero() const;
};

// Sparse, paged, 32-bit byte-addressable memory. Unmapped reads yield zero;
// pages materialize on first write. Pages may be shared copy-on-write between
// spaces and snapshots; sharing is invisible (behavior equals deep copies).
//
// Ownership contract (from the kernel's concurrency model): a space is
// mutated only by the single executor that owns its process, and cloning or
// copying touches only quiescent spaces. Page refcounts change only at those
// quiescent points, so the unshare check cannot race a write.
class AddressSpace {
public:
    AddressSpace() = default;
    explicit AddressSpace(bool cow_enabled) : cow_enabled_(cow_enabled) {}

    uint32_t load32(uint32_t addr) const;         // addr 4-aligned
    void store32(uint32_t addr, uint32_t value);  // addr 4-aligned
    uint8_t load8(uint32_t addr) const;

    void read_bytes(uint32_t addr, std::span<uint8_t> out) const;
    void write_bytes(uint32_t addr, std::span<const uint8_t> in);

    // COW clone of the whole space (deep copy when COW disabled).
    AddressSpace clone() const;

    void clear() { pages_.clear(); }

    const Page* page(uint32_t page_no) const;
    Page* page_for_write(uint32_t page_no);  // materializes and unshares
    void drop_page(uint32_t page_no) { pages_.erase(page_no); }

    size_t page_count() const { return pages_.size(); }
    const std::map<uint32_t, std::shared_ptr<Page>>& pages() const { return pages_; }

    bool cow_enabled() const { return cow_enabled_; }

    // Content hash over non-zero pages; equal contents hash equal regardless
    // of which pages happen to be materialized.
    uint64_t content_hash() const;

    // Byte copy [src_addr, +len) -> [dst_addr, +len); addresses and len
    // 4-aligned. Whole-page spans are shared COW when possible. dst and src
    // may be the same space only for non-overlapping ranges.
    static void copy_range(AddressSpace& dst, uint32_t dst_addr, const AddressSpace& src,
                           uint32_t src_addr, uint32_t len);

private:
    std::map<uint32_t, std::shared_ptr<Page>> pages_;
    bool cow_enabled_ = true;
};

using Snapshot = AddressSpace;  // immutable by convention: never written after capture

}  // namespace detcloud::mem
