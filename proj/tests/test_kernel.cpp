#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "detcloud/assembler.hpp"
#include "detcloud/kernel.hpp"

using namespace detcloud;
using namespace detcloud::kern;
using vm::StopReason;

namespace {

Kernel run_guest(const std::string& src, uint64_t fuel, KernelConfig cfg = {}) {
    Kernel k(vm::assemble_string(src), fuel, cfg);
    k.run();
    return k;
}

// issue a syscall with the given constant registers
std::string sys(uint32_t sel, uint32_t child, uint32_t local, uint32_t remote, uint32_t len,
                uint32_t opts, uint64_t limit = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "    li r0, %u\n    li r1, %u\n    li r2, 0x%x\n    li r3, 0x%x\n"
                  "    li r4, 0x%x\n    li r5, %u\n    li r6, 0x%x\n    li r7, 0x%x\n    sys\n",
                  sel, child, local, remote, len, opts, uint32_t(limit),
                  uint32_t(limit >> 32));
    return buf;
}

}  // namespace

TEST_CASE("trivial halt root") {
    Kernel k = run_guest(".entry main\nmain: halt 0\n", 100);
    CHECK(k.root().stop == StopReason{StopReason::Kind::Halt, 0});
    CHECK(k.total_retired() == 1);
}

TEST_CASE("root infinite loop exhausts its budget exactly") {
    Kernel k = run_guest(".entry main\nmain: jmp main\n", 1000000);
    CHECK(k.root().stop.kind == StopReason::Kind::FuelOut);
    CHECK(k.total_retired() == 1000000);
    CHECK(k.root().fuel == 0);
}

TEST_CASE("root ret carries its exit code") {
    std::string src = ".entry main\nmain:\n" + sys(kSysRet, 42, 0, 0, 0, 0) + "    halt 9\n";
    // r1 = 42 is the RET code
    Kernel k = run_guest(src, 100);
    CHECK(k.root().stop == StopReason{StopReason::Kind::Halt, 42});
}

TEST_CASE("put copy then get copy round-trips bytes") {
    std::string src = R"(.entry main
main:
    li r1, 0x12ab34cd
    li r2, 0x9000
    store r1, r2, 0
)" + sys(kSysPut, 0, 0x9000, 0x5000, 4, 0) +
                      sys(kSysGet, 0, 0x9100, 0x5000, 4, 0) + R"(
    li r2, 0x9100
    load r3, r2, 0
    halt r3
)";
    Kernel k = run_guest(src, 1000);
    CHECK(k.root().stop == StopReason{StopReason::Kind::Halt, 0x12ab34cd});
    REQUIRE(k.root().children.size() == 1);
    CHECK(k.root().children[0]->space.load32(0x5000) == 0x12ab34cd);
}

TEST_CASE("syscall errors are deterministic statuses") {
    // GET from a child index beyond next-free
    std::string bad_child = ".entry main\nmain:\n" + sys(kSysGet, 5, 0, 0, 4, 0) +
                            "    halt r0\n";
    CHECK(run_guest(bad_child, 100).root().stop.code == uint32_t(SysStatus::BadChild));

    // range overflow: local + len wraps past the top
    std::string range = ".entry main\nmain:\n" +
                        sys(kSysPut, 0, 0xfffff000, 0, 0x2000, 0) + "    halt r0\n";
    CHECK(run_guest(range, 100).root().stop.code == uint32_t(SysStatus::Range));

    // misaligned length
    std::string misalign = ".entry main\nmain:\n" + sys(kSysPut, 0, 0, 0, 5, 0) + "    halt r0\n";
    CHECK(run_guest(misalign, 100).root().stop.code == uint32_t(SysStatus::Range));

    // MERGE without a snapshot
    std::string nosnap = ".entry main\nmain:\n" + sys(kSysPut, 0, 0, 0x5000, 4, 0) +
                         sys(kSysGet, 0, 0x6000, 0x5000, 4, kOptMerge) + "    halt r0\n";
    CHECK(run_guest(nosnap, 100).root().stop.code == uint32_t(SysStatus::NoSnap));

    // MERGE on a PUT
    std::string badreq = ".entry main\nmain:\n" + sys(kSysPut, 0, 0, 0, 4, kOptMerge) +
                         "    halt r0\n";
    CHECK(run_guest(badreq, 100).root().stop.code == uint32_t(SysStatus::BadReq));
}

namespace {

// The clone-dispatch pattern the guest runtime is built on. A register-copying
// clone leaves parent and child bit-identical at the resume point, so the
// parent marks the stopped child afterwards: it injects flag=1 into the
// child's copy of 0xa000 (its own stays 0), takes the snapshot, and starts
// it. Both sides resume after the clone PUT and branch on the flag.
std::string clone_guest(const std::string& parent_tail, const std::string& child_body,
                        uint64_t child_limit) {
    std::string src = ".entry main\nmain:\n";
    src += "    li r1, 1\n    li r2, 0xa004\n    store r1, r2, 0\n";  // marker source
    src += sys(kSysPut, 0, 0, 0, kLenWholeSpace, kOptCopyRegs);
    src += R"(
    li r2, 0xa000
    load r1, r2, 0
    li r3, 0
    bne r1, r3, child_path
)";
    src += sys(kSysPut, 0, 0xa004, 0xa000, 4, kOptSnap | kOptStart, child_limit);
    src += parent_tail;
    src += "child_path:\n" + child_body;
    return src;
}

}  // namespace

TEST_CASE("started child runs under its instruction limit, counted exactly") {
    // child: endless 2-instruction loop -> FUELOUT after exactly 500 retired
    std::string src = clone_guest(
        sys(kSysGet, 0, 0, 0, 0, kOptCopyRegs) + "    halt r1\n",
        "    li r4, 0\nloop:\n    add r4, r4, 1\n    jmp loop\n", 500);
    Kernel k = run_guest(src, 100000);
    CHECK(k.root().stop == StopReason{StopReason::Kind::Halt, kStopFuelOut});
    REQUIRE(k.root().children.size() == 1);
    const Process& child = *k.root().children[0];
    CHECK(child.stop.kind == StopReason::Kind::FuelOut);
    CHECK(child.fuel == 0);
    // budget 500: 4 dispatch instructions, li r4, then add/jmp pairs over the
    // remaining 495 -> ceil(495/2) = 248 adds retire before the fuel runs out
    CHECK(child.regs.r[4] == 248);
}

TEST_CASE("snapshot equals the child space when the child never writes") {
    std::string src = clone_guest(
        sys(kSysGet, 0, 0, 0, 0, kOptCopyRegs) + "    halt r2\n",
        sys(kSysRet, 7, 0, 0, 0, 0) + "    halt 1\n", 1000);
    Kernel k = run_guest(src, 100000);
    CHECK(k.root().stop == StopReason{StopReason::Kind::Halt, 7});  // r2 = child's ret code
    const Process& child = *k.root().children[0];
    REQUIRE(child.snapshot.has_value());
    // the child only executed register ops and a RET; its pages never changed
    CHECK(child.space.content_hash() == child.snapshot->content_hash());
}

TEST_CASE("divide-by-zero in a child reads like a ret with a distinct status") {
    std::string src = clone_guest(
        sys(kSysGet, 0, 0, 0, 0, kOptCopyRegs) +
            "    li r3, 0x9000\n    store r1, r3, 0\n    store r2, r3, 4\n    halt 0\n",
        "    li r1, 8\n    li r2, 0\n    divu r1, r1, r2\n    halt 1\n", 1000);
    Kernel k = run_guest(src, 100000);
    CHECK(k.root().space.load32(0x9000) == kStopExcept);
    CHECK(k.root().space.load32(0x9004) == uint32_t(vm::ExceptKind::DivZero));
}

TEST_CASE("get merge copies only child-changed words and flags conflicts") {
    // parent writes to 0xb008 after the snapshot; the child writes 0xb000
    // (clean merge) and 0xb008 (conflict)
    std::string child_body =
        "    li r1, 0x1111\n    li r2, 0xb000\n    store r1, r2, 0\n"
        "    li r1, 0x3333\n    store r1, r2, 8\n" +
        sys(kSysRet, 0, 0, 0, 0, 0);
    std::string parent_tail =
        "    li r1, 0x2222\n    li r2, 0xb000\n    store r1, r2, 8\n" +
        sys(kSysGet, 0, 0xb000, 0xb000, 16, kOptMerge) +
        "    li r3, 0xb100\n    store r0, r3, 0\n    store r1, r3, 4\n    store r2, r3, 8\n"
        "    halt 0\n";
    std::string src = clone_guest(parent_tail, child_body, 10000);
    Kernel k = run_guest(src, 100000);
    const Process& root = k.root();
    CHECK(root.space.load32(0xb000) == 0x1111);                          // merged
    CHECK(root.space.load32(0xb008) == 0x2222);                          // conflict: parent kept
    CHECK(root.space.load32(0xb100) == uint32_t(SysStatus::Conflict));   // r0
    CHECK(root.space.load32(0xb104) == 1);                               // conflict count
    CHECK(root.space.load32(0xb108) == 0xb008);                          // first conflict addr
    CHECK(root.last_conflicts == std::vector<uint32_t>{0xb008});
}

TEST_CASE("get merge leaves the parent untouched when the child wrote nothing") {
    std::string src = clone_guest(
        "    li r1, 0x7777\n    li r2, 0xb000\n    store r1, r2, 4\n" +
            sys(kSysGet, 0, 0xb000, 0xb000, 64, kOptMerge) +
            "    li r2, 0xb000\n    load r3, r2, 4\n    halt r3\n",
        sys(kSysRet, 0, 0, 0, 0, 0), 10000);
    Kernel k = run_guest(src, 100000);
    CHECK(k.root().stop == StopReason{StopReason::Kind::Halt, 0x7777});
}

TEST_CASE("fuel is conserved: granted == consumed + refunded") {
    // child burns a known amount then rets; parent's final fuel accounts for it
    std::string src = clone_guest(
        sys(kSysGet, 0, 0, 0, 0, kOptCopyRegs) + "    halt 0\n",
        "    li r4, 0\nloop:\n    add r4, r4, 1\n    li r3, 100\n    bne r4, r3, loop\n" +
            sys(kSysRet, 0, 0, 0, 0, 0),
        100000);
    uint64_t fuel = 1000000;
    Kernel k = run_guest(src, fuel);
    CHECK(k.root().stop.kind == StopReason::Kind::Halt);
    // everything the subtree retired came out of the root's budget
    CHECK(k.root().fuel == fuel - k.total_retired());
    CHECK(k.root().children[0]->fuel == 0);
}

TEST_CASE("a fuelout child can be restarted with a fresh budget") {
    std::string src = clone_guest(
        // parent: first GET sees FUELOUT, restart with enough fuel, then GET again
        sys(kSysGet, 0, 0, 0, 0, kOptCopyRegs) + "    li r4, 0x9000\n    store r1, r4, 0\n" +
            sys(kSysPut, 0, 0, 0, 0, kOptStart, 100000) +
            sys(kSysGet, 0, 0, 0, 0, kOptCopyRegs) + "    li r4, 0x9000\n    store r1, r4, 4\n"
                                                     "    halt 0\n",
        // child: long loop then ret 5
        "    li r4, 0\nloop:\n    add r4, r4, 1\n    li r3, 1000\n    bne r4, r3, loop\n" +
            sys(kSysRet, 5, 0, 0, 0, 0),
        100);  // first start: too little fuel
    Kernel k = run_guest(src, 10000000);
    CHECK(k.root().space.load32(0x9000) == kStopFuelOut);
    CHECK(k.root().space.load32(0x9004) == kStopHalt);
}

TEST_CASE("terminal state is identical across workers, seeds and cow modes") {
    std::string src = clone_guest(
        sys(kSysGet, 0, 0xb000, 0xb000, 64, kOptMerge) +
            sys(kSysGet, 0, 0, 0, 0, kOptCopyRegs) + "    halt r2\n",
        "    li r1, 0xabcd\n    li r2, 0xb000\n    store r1, r2, 12\n"
        "    li r4, 0\nloop:\n    add r4, r4, 1\n    li r3, 997\n    bne r4, r3, loop\n" +
            sys(kSysRet, 3, 0, 0, 0, 0),
        50000);
    uint64_t reference = 0;
    for (int workers : {1, 2, 4}) {
        for (uint64_t seed : {0ull, 7ull, 99ull}) {
            for (bool cow : {true, false}) {
                KernelConfig cfg;
                cfg.workers = workers;
                cfg.seed = seed;
                cfg.cow = cow;
                cfg.slice = 512;  // force plenty of preemption
                Kernel k = run_guest(src, 1000000, cfg);
                if (!reference) reference = k.tree_hash();
                REQUIRE(k.tree_hash() == reference);
            }
        }
    }
}

TEST_CASE("isolation checker accepts a clean run") {
    KernelConfig cfg;
    cfg.checker = true;
    cfg.trace = true;
    std::string src = clone_guest(
        sys(kSysGet, 0, 0, 0, 0, kOptCopyRegs) + "    halt r1\n",
        sys(kSysRet, 1, 0, 0, 0, 0), 1000);
    Kernel k = run_guest(src, 100000, cfg);
    CHECK(k.root().stop == StopReason{StopReason::Kind::Halt, kStopHalt});
    CHECK(!k.event_log().empty());
}

TEST_CASE("event log content is schedule independent") {
    std::string src = clone_guest(
        sys(kSysGet, 0, 0xb000, 0xb000, 32, kOptMerge) +
            sys(kSysGet, 0, 0, 0, 0, kOptCopyRegs) + "    halt 0\n",
        "    li r1, 5\n    li r2, 0xb000\n    store r1, r2, 0\n" + sys(kSysRet, 0, 0, 0, 0, 0),
        20000);
    std::string reference;
    for (int workers : {1, 2, 4}) {
        KernelConfig cfg;
        cfg.workers = workers;
        cfg.seed = uint64_t(workers) * 1234567;
        cfg.trace = true;
        cfg.slice = 256;
        Kernel k = run_guest(src, 1000000, cfg);
        if (reference.empty()) reference = k.event_log();
        REQUIRE(k.event_log() == reference);
    }
}
