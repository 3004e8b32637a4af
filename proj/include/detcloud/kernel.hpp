#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "detcloud/process.hpp"
#include "detcloud/program.hpp"

namespace detcloud::kern {

// Deliberate determinism-breaking faults for the mutation-sensitivity suite.
// Never enabled outside tests and `detcloud fuzz --mutate`.
enum class Mutation {
    None,
    LiveMerge,    // GET(MERGE) does not wait for the child to stop
    SharedFuel,   // one guest-wide fuel pool instead of per-start reservation
};

struct KernelConfig {
    int workers = 1;
    uint64_t seed = 0;          // drives work-stealing order only
    bool cow = true;            // copy-on-write page sharing (off: deep copies)
    bool trace = false;         // collect the per-syscall event log
    bool checker = false;       // isolation assertions around every transfer
    uint64_t slice = 1 << 20;   // max instructions per dispatch
    uint32_t max_stall_us = 0;  // random per-dispatch worker stalls (probe)
    Mutation mutation = Mutation::None;
};

// One guest: a hierarchy of shared-nothing processes scheduled over worker
// threads. All inter-process effects happen at syscall boundaries under the
// kernel lock, between quiescent processes, which is what makes the terminal
// state independent of (workers, seed, stalls).
class Kernel {
public:
    Kernel(const vm::GuestProgram& program, uint64_t fuel, KernelConfig config = {});
    Kernel(Kernel&&) noexcept;
    Kernel& operator=(Kernel&&) noexcept;
    ~Kernel();

    // Extra bytes layered over the root image before the first instruction.
    void overlay_root(uint32_t addr, std::span<const uint8_t> bytes);

    // Runs every process to quiescence. Asserts the no-deadlock invariant.
    void run();

    Process& root() { return *root_; }
    const Process& root() const { return *root_; }

    // Deterministic fingerprint of the terminal tree: ids, states, stop
    // reasons, registers, remaining fuel and space contents.
    uint64_t tree_hash() const;

    // Per-syscall event log, processes in id order. Empty unless trace.
    std::string event_log() const;

    uint64_t total_retired() const { return total_retired_; }

private:
    struct Worker;

    void enqueue(Process* p);
    Process* try_pop(int self, uint64_t& rng_state);
    void worker_loop(int index);

    void handle_stop(Process* p, vm::StopReason reason);
    void handle_syscall(Process* p);
    void complete_transfer(Process* parent, Process* child, const SyscallRequest& req);
    SysStatus validate(const SyscallRequest& req) const;
    void trace_syscall(Process* p, const SyscallRequest& req, SysStatus status);

    uint64_t isolation_hash_except(const Process* a, const Process* b) const;

    KernelConfig config_;
    std::unique_ptr<Process> root_;

    // scheduler state, guarded by mu_
    std::vector<std::vector<Process*>> queues_;
    size_t ready_count_ = 0;
    int executing_count_ = 0;
    bool done_ = false;
    uint64_t total_retired_ = 0;
    uint64_t shared_pool_ = 0;  // Mutation::SharedFuel only

    struct Sync;
    std::unique_ptr<Sync> sync_;
};

}  // namespace detcloud::kern
