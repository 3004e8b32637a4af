#include "detcloud/file_image.hpp"

#include <algorithm>
#include <cstring>

namespace detcloud::fs {

using namespace rtabi;

int FileImage::find(std::string_view name) const {
    for (size_t i = 0; i < slots_.size(); i++)
        if (slots_[i] && slots_[i]->name == name) return int(i);
    return -1;
}

const FileEntry* FileImage::get(std::string_view name) const {
    int i = find(name);
    if (i < 0 || slots_[size_t(i)]->deleted()) return nullptr;
    return &*slots_[size_t(i)];
}

int FileImage::ensure_slot(std::string_view name, bool append_only, FsStatus& st) {
    if (name.empty() || name.size() > kNameLen - 1) {
        st = FsStatus::BadName;
        return -1;
    }
    int i = find(name);
    if (i >= 0) {
        auto& e = *slots_[size_t(i)];
        if (e.conflicted()) {
            st = FsStatus::Conflict;
            return -1;
        }
        if (e.deleted()) {
            // revive the tombstone, but never append-only: the deletion broke
            // the continuous-append history the union rule relies on
            e.flags = 0;
            e.data.clear();
            e.version++;
        }
        st = FsStatus::Ok;
        return i;
    }
    for (size_t s = 0; s < slots_.size(); s++) {
        if (!slots_[s]) {
            slots_[s] = FileEntry{std::string(name), {}, 1, append_only ? kFlagAppend : 0};
            st = FsStatus::Ok;
            return int(s);
        }
    }
    st = FsStatus::Full;
    return -1;
}

FsStatus FileImage::create(std::string_view name, bool append_only) {
    FsStatus st = FsStatus::Ok;
    ensure_slot(name, append_only, st);
    return st;
}

FsStatus FileImage::write(std::string_view name, uint32_t offset, std::span<const uint8_t> bytes) {
    FsStatus st = FsStatus::Ok;
    int i = ensure_slot(name, false, st);
    if (i < 0) return st;
    auto& e = *slots_[size_t(i)];
    offset = std::min<uint32_t>(offset, uint32_t(e.data.size()));
    if (uint64_t(offset) + bytes.size() > kMaxFileSize) return FsStatus::TooBig;

    // a plain write forfeits append-only status even when it changes nothing
    e.flags &= ~kFlagAppend;
    if (bytes.empty()) return FsStatus::Ok;

    bool changed = false;
    if (offset + bytes.size() > e.data.size()) {
        e.data.resize(offset + bytes.size());
        changed = true;
    }
    if (!changed) changed = std::memcmp(e.data.data() + offset, bytes.data(), bytes.size()) != 0;
    std::memcpy(e.data.data() + offset, bytes.data(), bytes.size());
    if (changed) e.version++;
    return FsStatus::Ok;
}

FsStatus FileImage::append(std::string_view name, std::span<const uint8_t> bytes) {
    FsStatus st = FsStatus::Ok;
    int i = ensure_slot(name, true, st);
    if (i < 0) return st;
    auto& e = *slots_[size_t(i)];
    if (e.data.size() + bytes.size() > kMaxFileSize) return FsStatus::TooBig;
    if (bytes.empty()) return FsStatus::Ok;
    e.data.insert(e.data.end(), bytes.begin(), bytes.end());
    e.version++;
    return FsStatus::Ok;
}

FsStatus FileImage::remove(std::string_view name) {
    int i = find(name);
    if (i < 0 || slots_[size_t(i)]->deleted()) return FsStatus::NoEnt;
    auto& e = *slots_[size_t(i)];
    if (e.conflicted()) return FsStatus::Conflict;
    e.data.clear();
    e.flags = kFlagDeleted;
    e.version++;
    return FsStatus::Ok;
}

FsStatus FileImage::clear_conflict(std::string_view name) {
    int i = find(name);
    if (i < 0) return FsStatus::NoEnt;
    auto& e = *slots_[size_t(i)];
    if (!e.conflicted()) return FsStatus::NotFlagged;
    e.flags &= ~kFlagConflict;
    return FsStatus::Ok;
}

void FileImage::set_conflict(int slot) {
    if (slot >= 0 && slots_[size_t(slot)]) slots_[size_t(slot)]->flags |= kFlagConflict;
}

void FileImage::hard_remove(std::string_view name) {
    int i = find(name);
    if (i >= 0) slots_[size_t(i)].reset();
}

BaseCapture FileImage::capture() const {
    BaseCapture cap;
    for (size_t i = 0; i < slots_.size(); i++) {
        if (!slots_[i]) continue;
        cap.slots[i].version = slots_[i]->version;
        cap.slots[i].length = uint32_t(slots_[i]->data.size());
    }
    return cap;
}

void FileImage::into_space(mem::AddressSpace& space, uint32_t base) const {
    uint32_t data_area = base + (kFsData - kFsBase);
    for (size_t i = 0; i < slots_.size(); i++) {
        if (!slots_[i]) continue;
        const auto& e = *slots_[i];
        uint8_t entry[kDirentSize] = {};
        std::memcpy(entry, e.name.data(), std::min<size_t>(e.name.size(), kNameLen - 1));
        uint32_t len = uint32_t(e.data.size());
        uint32_t data_off = uint32_t(i) * kFileSlot;
        std::memcpy(entry + kDirOffLen, &len, 4);
        std::memcpy(entry + kDirOffVer, &e.version, 4);
        std::memcpy(entry + kDirOffFlags, &e.flags, 4);
        std::memcpy(entry + kDirOffData, &data_off, 4);
        space.write_bytes(base + uint32_t(i) * kDirentSize, entry);
        if (!e.data.empty()) space.write_bytes(data_area + data_off, e.data);
    }
}

FileImage FileImage::from_space(const mem::AddressSpace& space, uint32_t base) {
    FileImage img;
    uint32_t data_area = base + (kFsData - kFsBase);
    for (uint32_t i = 0; i < kMaxFiles; i++) {
        uint8_t entry[kDirentSize];
        space.read_bytes(base + i * kDirentSize, entry);
        if (entry[0] == 0) continue;
        FileEntry e;
        size_t n = 0;
        while (n < kNameLen - 1 && entry[n]) n++;
        e.name.assign(reinterpret_cast<const char*>(entry), n);
        uint32_t len, data_off;
        std::memcpy(&len, entry + kDirOffLen, 4);
        std::memcpy(&e.version, entry + kDirOffVer, 4);
        std::memcpy(&e.flags, entry + kDirOffFlags, 4);
        std::memcpy(&data_off, entry + kDirOffData, 4);
        len = std::min(len, kMaxFileSize);
        e.data.resize(len);
        if (len) space.read_bytes(data_area + data_off, e.data);
        img.slots_[i] = std::move(e);
    }
    return img;
}

std::vector<uint8_t> FileImage::canonical() const {
    std::vector<const FileEntry*> live;
    for (const auto& s : slots_)
        if (s && !s->deleted()) live.push_back(&*s);
    std::sort(live.begin(), live.end(),
              [](const FileEntry* a, const FileEntry* b) { return a->name < b->name; });
    std::vector<uint8_t> out;
    for (const FileEntry* e : live) {
        uint32_t name_len = uint32_t(e->name.size());
        uint32_t len = uint32_t(e->data.size());
        uint32_t flags = e->flags & (kFlagAppend | kFlagConflict);
        auto put32 = [&out](uint32_t v) {
            out.insert(out.end(), {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)});
        };
        put32(name_len);
        out.insert(out.end(), e->name.begin(), e->name.end());
        put32(flags);
        put32(len);
        out.insert(out.end(), e->data.begin(), e->data.end());
    }
    return out;
}

uint64_t FileImage::content_hash() const {
    auto canon = canonical();
    return fnv64(canon);
}

size_t FileImage::live_count() const {
    size_t n = 0;
    for (const auto& s : slots_)
        if (s && !s->deleted()) n++;
    return n;
}

void FileImage::put_file(std::string_view name, std::vector<uint8_t> bytes, uint32_t flags) {
    int i = find(name);
    if (i < 0) {
        for (size_t s = 0; s < slots_.size(); s++) {
            if (!slots_[s]) {
                i = int(s);
                break;
            }
        }
        if (i < 0) return;  // full: callers check capacity via create()
        slots_[size_t(i)] = FileEntry{std::string(name), {}, 0, 0};
    }
    auto& e = *slots_[size_t(i)];
    e.data = std::move(bytes);
    e.flags = flags;
    e.version++;
}

ImageDiff diff_images(const FileImage& before, const FileImage& after) {
    ImageDiff d;
    for (const auto& s : after.slots()) {
        if (!s || s->deleted()) continue;
        const FileEntry* b = before.get(s->name);
        if (!b || b->data != s->data ||
            (b->flags & (kFlagAppend | kFlagConflict)) != (s->flags & (kFlagAppend | kFlagConflict)))
            d.changed.push_back(*s);
    }
    for (const auto& s : before.slots()) {
        if (!s || s->deleted()) continue;
        if (!after.get(s->name)) d.deleted.push_back(s->name);
    }
    std::sort(d.changed.begin(), d.changed.end(),
              [](const FileEntry& a, const FileEntry& b) { return a.name < b.name; });
    std::sort(d.deleted.begin(), d.deleted.end());
    return d;
}

FileImage apply_diff(const FileImage& base, const ImageDiff& diff) {
    FileImage out = base;
    for (const auto& name : diff.deleted) out.hard_remove(name);
    for (const auto& e : diff.changed) out.put_file(e.name, e.data, e.flags);
    return out;
}

}  // namespace detcloud::fs
