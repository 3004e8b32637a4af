#pragma once

#include <cstdint>
#include <vector>

#include "detcloud/address_space.hpp"

namespace detcloud::mem {

struct MergeResult {
    size_t words_merged = 0;
    // Parent-space byte addresses of conflicting words, ascending.
    std::vector<uint32_t> conflict_addrs;

    bool conflict() const { return !conflict_addrs.empty(); }
};

// Word-level snapshot merge: copies into the parent only the words the child
// changed relative to its reference snapshot; words the parent also changed
// (to a different value) are left alone and reported as conflicts. The
// snapshot is addressed in child coordinates. All addresses and len 4-aligned.
//
// Pages the child left untouched are skipped without being read word by word;
// the skip is keyed on page identity or content, never on timing, so enabling
// it cannot change observable results.
MergeResult merge_region(AddressSpace& parent, uint32_t parent_addr, const AddressSpace& child,
                         uint32_t child_addr, const Snapshot& snapshot, uint32_t len);

}  // namespace detcloud::mem
