#pragma once

#include <string>
#include <utility>
#include <vector>

#include "detcloud/file_image.hpp"

namespace detcloud::fs {

enum class FileOutcome {
    Unchanged,
    TookParent,
    TookChild,
    AppendedUnion,
    Conflict,
};

struct ReconcileReport {
    std::vector<std::pair<std::string, FileOutcome>> outcomes;  // name order of processing
    size_t conflicts = 0;

    bool any_conflict() const { return conflicts != 0; }
};

// Version-based three-way reconciliation of two replicas that share the
// captured base. Per file: neither modified keeps the parent's copy; one
// side modified wins; both modified merges only when both sides stayed
// append-only (base content, then the parent's appends, then the child's),
// anything else is a conflict that keeps the parent's content and sets the
// flag. Deletion counts as a modification. Pure function of its inputs.
std::pair<FileImage, ReconcileReport> reconcile_fs(const BaseCapture& base,
                                                   const FileImage& parent,
                                                   const FileImage& child);

// Re-enable access to a conflict-flagged file, keeping its (parent) content.
FsStatus clear_conflict(FileImage& image, std::string_view name);

}  // namespace detcloud::fs
