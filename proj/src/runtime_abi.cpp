#include "detcloud/runtime_abi.hpp"

namespace detcloud::rtabi {

namespace {
constexpr AbiConst kConsts[] = {
    {"PROG_BASE", kProgBase},
    {"RT_BASE", kRtBase},
    {"HEAP_END", kHeapEnd},
    {"META_BASE", kMetaBase},
    {"ARGS_BASE", kArgsBase},
    {"SCRATCH_BASE", kScratchBase},
    {"FS_BASE", kFsBase},
    {"FS_TABLE", kFsTable},
    {"FS_DATA", kFsData},
    {"FILE_SLOT", kFileSlot},
    {"FS_END", kFsEnd},
    {"STACK_BASE", kStackBase},
    {"STACK_WIN", kStackWin},
    {"MAX_FILES", kMaxFiles},
    {"MAX_FILE_SIZE", kMaxFileSize},
    {"NAME_LEN", kNameLen},
    {"DIRENT_SIZE", kDirentSize},
    {"DIR_OFF_NAME", kDirOffName},
    {"DIR_OFF_LEN", kDirOffLen},
    {"DIR_OFF_VER", kDirOffVer},
    {"DIR_OFF_FLAGS", kDirOffFlags},
    {"DIR_OFF_DATA", kDirOffData},
    {"FLAG_APPEND", kFlagAppend},
    {"FLAG_CONFLICT", kFlagConflict},
    {"FLAG_DELETED", kFlagDeleted},
    {"M_CONFLICTS", kMetaConflicts},
    {"M_CONFLICT_ADDR", kMetaConflictAddr},
};
}

std::span<const AbiConst> abi_constants() { return kConsts; }

}  // namespace detcloud::rtabi
