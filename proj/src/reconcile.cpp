#include "detcloud/reconcile.hpp"

#include <algorithm>

namespace detcloud::fs {

using namespace rtabi;

namespace {

void record(ReconcileReport& rep, const std::string& name, FileOutcome oc) {
    rep.outcomes.emplace_back(name, oc);
    if (oc == FileOutcome::Conflict) rep.conflicts++;
}

// merged version after a take: strictly above whatever either side saw
uint32_t vmax(const FileEntry* a, const FileEntry* b) {
    uint32_t v = 0;
    if (a) v = std::max(v, a->version);
    if (b) v = std::max(v, b->version);
    return v;
}

}  // namespace

std::pair<FileImage, ReconcileReport> reconcile_fs(const BaseCapture& base,
                                                   const FileImage& parent,
                                                   const FileImage& child) {
    FileImage merged = parent;
    ReconcileReport rep;

    auto& pslots = parent.slots();
    auto& cslots = child.slots();

    // files that existed at the capture occupy the same slot in both replicas
    for (size_t f = 0; f < kMaxFiles; f++) {
        uint32_t bv = base.slots[f].version;
        if (bv == 0) continue;
        const FileEntry* pe = pslots[f] ? &*pslots[f] : nullptr;
        const FileEntry* ce = cslots[f] ? &*cslots[f] : nullptr;
        if (!pe || !ce) continue;  // capture always came from a live table

        bool p_mod = pe->version > bv;
        bool c_mod = ce->version > bv;
        if (!c_mod) {
            record(rep, pe->name, p_mod ? FileOutcome::TookParent : FileOutcome::Unchanged);
            continue;
        }
        if (!p_mod) {
            FileEntry take = *ce;
            take.version = vmax(pe, ce);
            merged.slot_mut(f) = std::move(take);
            record(rep, pe->name, FileOutcome::TookChild);
            continue;
        }
        // both modified
        bool both_append = pe->append_only() && ce->append_only();
        auto& slot = merged.slot_mut(f);
        uint32_t base_len = base.slots[f].length;
        if (both_append && ce->data.size() >= base_len &&
            slot->data.size() + (ce->data.size() - base_len) <= kMaxFileSize) {
            slot->data.insert(slot->data.end(), ce->data.begin() + base_len, ce->data.end());
            slot->version = vmax(pe, ce) + 1;
            record(rep, pe->name, FileOutcome::AppendedUnion);
        } else {
            slot->flags |= kFlagConflict;
            slot->version = vmax(pe, ce) + 1;
            record(rep, pe->name, FileOutcome::Conflict);
        }
    }

    // files created after the capture: match by name across the replicas
    for (size_t cf = 0; cf < kMaxFiles; cf++) {
        if (base.slots[cf].version != 0) continue;
        const FileEntry* ce = cslots[cf] ? &*cslots[cf] : nullptr;
        if (!ce) continue;
        int pf = merged.find(ce->name);
        if (pf < 0) {
            // child-only file: adopt (silently dropped if the table is full,
            // matching the guest runtime)
            FsStatus st = merged.create(ce->name, ce->append_only());
            if (st == FsStatus::Ok) {
                int slot = merged.find(ce->name);
                merged.slot_mut(size_t(slot)) = *ce;
                record(rep, ce->name, FileOutcome::TookChild);
            }
            continue;
        }
        // the parent created the same name independently: empty base
        auto& slot = merged.slot_mut(size_t(pf));
        bool both_append = slot->append_only() && ce->append_only();
        if (both_append && slot->data.size() + ce->data.size() <= kMaxFileSize) {
            slot->data.insert(slot->data.end(), ce->data.begin(), ce->data.end());
            slot->version = vmax(&*slot, ce) + 1;
            record(rep, ce->name, FileOutcome::AppendedUnion);
        } else {
            slot->flags |= kFlagConflict;
            slot->version = vmax(&*slot, ce) + 1;
            record(rep, ce->name, FileOutcome::Conflict);
        }
    }

    return {std::move(merged), std::move(rep)};
}

FsStatus clear_conflict(FileImage& image, std::string_view name) {
    return image.clear_conflict(name);
}

}  // namespace detcloud::fs
