#pragma once

#include <cstdint>
#include <span>

namespace detcloud::rtabi {

// Host-side mirror of guests/runtime/abi.inc. A unit test parses the .inc
// and diffs every name listed here, so the two cannot drift silently.

constexpr uint32_t kProgBase = 0x00010000;
constexpr uint32_t kRtBase = 0x00080000;
constexpr uint32_t kHeapEnd = 0x00200000;

constexpr uint32_t kMetaBase = 0x0d000000;
constexpr uint32_t kArgsBase = 0x0e000000;
constexpr uint32_t kScratchBase = 0x0e100000;

constexpr uint32_t kFsBase = 0x10000000;
constexpr uint32_t kFsTable = 0x10000000;
constexpr uint32_t kFsData = 0x10010000;
constexpr uint32_t kFileSlot = 0x00400000;
constexpr uint32_t kFsEnd = 0x50010000;

constexpr uint32_t kStackBase = 0xe0000000;
constexpr uint32_t kStackWin = 0x00100000;

constexpr uint32_t kMaxFiles = 256;
constexpr uint32_t kMaxFileSize = 0x400000;
constexpr uint32_t kNameLen = 64;
constexpr uint32_t kDirentSize = 80;
constexpr uint32_t kDirOffName = 0;
constexpr uint32_t kDirOffLen = 64;
constexpr uint32_t kDirOffVer = 68;
constexpr uint32_t kDirOffFlags = 72;
constexpr uint32_t kDirOffData = 76;

constexpr uint32_t kFlagAppend = 1;
constexpr uint32_t kFlagConflict = 2;
constexpr uint32_t kFlagDeleted = 4;

constexpr uint32_t kMetaConflicts = 0x028;
constexpr uint32_t kMetaConflictAddr = 0x02c;

struct AbiConst {
    const char* name;
    uint32_t value;
};

// every constant above, keyed by its abi.inc name
std::span<const AbiConst> abi_constants();

}  // namespace detcloud::rtabi
