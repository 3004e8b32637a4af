#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "detcloud/address_space.hpp"
#include "detcloud/interp.hpp"

namespace detcloud::kern {

// Syscall ABI (mirrored by guests/runtime/abi.inc).
// SYS reads r0 = selector, r1..r7 = child, local addr, remote addr, length,
// option bits, fuel-limit lo, fuel-limit hi. On return r0 holds a SysStatus;
// GET additionally writes r1/r2 (stop info for COPY_REGS, conflict count and
// first address for MERGE). r3..r7 are preserved.
enum : uint32_t { kSysPut = 0, kSysGet = 1, kSysRet = 2 };

enum : uint32_t {
    kOptCopyRegs = 1,
    kOptSnap = 2,
    kOptStart = 4,
    kOptMerge = 8,
    kOptZero = 16,
};

enum class SysStatus : uint32_t {
    Ok = 0,
    Conflict = 1,
    BadChild = 2,
    Range = 3,
    NoSnap = 4,
    BadReq = 5,
};

// Stop kinds as exposed to guests through GET(COPY_REGS).
enum : uint32_t { kStopHalt = 1, kStopExcept = 2, kStopFuelOut = 3, kStopForced = 4 };

// local = remote = 0 with this length denotes a whole-space transfer.
constexpr uint32_t kLenWholeSpace = 0xfffffffc;

struct SyscallRequest {
    uint32_t selector = 0;
    uint32_t child = 0;
    uint32_t local = 0;
    uint32_t remote = 0;
    uint32_t len = 0;
    uint32_t opts = 0;
    uint64_t limit = 0;

    bool whole_space() const { return local == 0 && remote == 0 && len == kLenWholeSpace; }

    static SyscallRequest from_regs(const vm::Registers& regs) {
        SyscallRequest q;
        q.selector = regs.r[0];
        q.child = regs.r[1];
        q.local = regs.r[2];
        q.remote = regs.r[3];
        q.len = regs.r[4];
        q.opts = regs.r[5];
        q.limit = uint64_t(regs.r[6]) | uint64_t(regs.r[7]) << 32;
        return q;
    }
};

// One node of a guest hierarchy. State is owned by exactly one executor
// between syscalls; the kernel lock guards every transition.
struct Process {
    std::string id;  // path id: "0", "0.2", "0.2.1" — schedule independent
    Process* parent = nullptr;
    std::vector<std::unique_ptr<Process>> children;

    enum class State : uint8_t { Runnable, Stopped, Waiting };
    State state = State::Stopped;
    vm::StopReason stop{vm::StopReason::Kind::Forced, 0};
    uint32_t waiting_child = 0;

    vm::Registers regs;
    mem::AddressSpace space;
    std::optional<mem::Snapshot> snapshot;

    uint64_t fuel = 0;  // remaining budget; refunds flow at the parent's next sync

    std::vector<uint32_t> last_conflicts;  // parent-space addresses, last GET(MERGE)
    std::vector<std::string> events;       // trace, when enabled

    bool executing = false;

    Process* child_at(uint32_t idx) {
        return idx < children.size() ? children[idx].get() : nullptr;
    }
};

}  // namespace detcloud::kern
