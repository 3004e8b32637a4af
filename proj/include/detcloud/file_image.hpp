#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "detcloud/address_space.hpp"
#include "detcloud/runtime_abi.hpp"

namespace detcloud::fs {

enum class FsStatus {
    Ok = 0,
    NoEnt,
    Conflict,    // file is conflict-flagged
    Full,        // no free table slot
    TooBig,      // past the 4 MiB per-file cap
    BadName,
    NotFlagged,  // clear_conflict on a clean file
};

struct FileEntry {
    std::string name;  // 1..63 bytes
    std::vector<uint8_t> data;
    uint32_t version = 0;
    uint32_t flags = 0;  // rtabi::kFlagAppend / kFlagConflict / kFlagDeleted

    bool deleted() const { return flags & rtabi::kFlagDeleted; }
    bool conflicted() const { return flags & rtabi::kFlagConflict; }
    bool append_only() const { return flags & rtabi::kFlagAppend; }
};

// Per-file versions and lengths captured at a fork; the merge base of
// reconcile_fs. Slot-indexed like the table itself.
struct BaseCapture {
    struct Slot {
        uint32_t version = 0;
        uint32_t length = 0;
    };
    std::array<Slot, rtabi::kMaxFiles> slots{};
};

// Host view of the guest file system window: a flat table of up to 256
// files, each up to 4 MiB. Mirrors the guest runtime's behavior: versions
// advance exactly when content changes, appends through the append API keep
// the append-only flag, any plain write clears it.
class FileImage {
public:
    const std::array<std::optional<FileEntry>, rtabi::kMaxFiles>& slots() const { return slots_; }
    std::optional<FileEntry>& slot_mut(size_t i) { return slots_[i]; }

    int find(std::string_view name) const;  // slot or -1 (tombstones count)
    const FileEntry* get(std::string_view name) const;  // live files only

    FsStatus create(std::string_view name, bool append_only);
    // Write at an offset (clamped to the current end); clears the append
    // flag. Creates the file if missing.
    FsStatus write(std::string_view name, uint32_t offset, std::span<const uint8_t> bytes);
    FsStatus append(std::string_view name, std::span<const uint8_t> bytes);
    FsStatus remove(std::string_view name);  // tombstone; a modification
    void hard_remove(std::string_view name);  // vacate the slot (store upkeep)
    FsStatus clear_conflict(std::string_view name);
    void set_conflict(int slot);

    BaseCapture capture() const;

    // exact window layout (docs/runtime.md): table at base, slot data areas
    void into_space(mem::AddressSpace& space, uint32_t base = rtabi::kFsBase) const;
    static FileImage from_space(const mem::AddressSpace& space, uint32_t base = rtabi::kFsBase);

    // name-sorted (name, flags, content) over live files; the determinism
    // fingerprint input
    std::vector<uint8_t> canonical() const;
    uint64_t content_hash() const;

    size_t live_count() const;

    // gateway helpers: named-file replacement
    void put_file(std::string_view name, std::vector<uint8_t> bytes, uint32_t flags = 0);

private:
    int ensure_slot(std::string_view name, bool append_only, FsStatus& st);
    std::array<std::optional<FileEntry>, rtabi::kMaxFiles> slots_{};
};

// Files present or changed in `after` relative to `before`, plus names that
// went away. Applying a diff to `before` reproduces `after` up to versions.
struct ImageDiff {
    std::vector<FileEntry> changed;
    std::vector<std::string> deleted;

    bool empty() const { return changed.empty() && deleted.empty(); }
};

ImageDiff diff_images(const FileImage& before, const FileImage& after);
FileImage apply_diff(const FileImage& base, const ImageDiff& diff);

}  // namespace detcloud::fs
