#include "detcloud/merge.hpp"

#include <algorithm>
#include <cassert>
#include <cstring>

#include "detcloud/merge_kernels.hpp"

namespace detcloud::mem {

namespace {
const Page kZero{};
}

MergeResult merge_region(AddressSpace& parent, uint32_t parent_addr, const AddressSpace& child,
                         uint32_t child_addr, const Snapshot& snapshot, uint32_t len) {
    assert((parent_addr & 3) == 0 && (child_addr & 3) == 0 && (len & 3) == 0);
    MergeResult result;
    std::vector<uint32_t> conflicts;

    uint32_t done = 0;
    while (done < len) {
        uint32_t pa = parent_addr + done;
        uint32_t ca = child_addr + done;
        uint32_t chunk = std::min(kPageSize - (pa & (kPageSize - 1)), kPageSize - (ca & (kPageSize - 1)));
        chunk = std::min(chunk, len - done);

        const Page* cp = child.page(ca >> kPageShift);
        const Page* sp = snapshot.page(ca >> kPageShift);
        if (cp == sp) {  // same page object (COW) or both absent: no child writes
            done += chunk;
            continue;
        }
        const uint32_t* cw = (cp ? cp : &kZero)->words.data() + ((ca & (kPageSize - 1)) >> 2);
        const uint32_t* sw = (sp ? sp : &kZero)->words.data() + ((ca & (kPageSize - 1)) >> 2);
        size_t nwords = chunk >> 2;
        if (std::memcmp(cw, sw, chunk) == 0) {  // shared content, distinct pages
            done += chunk;
            continue;
        }

        Page* pp = parent.page_for_write(pa >> kPageShift);
        uint32_t* pw = pp->words.data() + ((pa & (kPageSize - 1)) >> 2);

        conflicts.clear();
        result.words_merged += simd::merge_words(pw, cw, sw, nwords, conflicts);
        for (uint32_t idx : conflicts) result.conflict_addrs.push_back(pa + idx * 4);

        done += chunk;
    }
    return result;
}

}  // namespace detcloud::mem
