#include "detcloud/kernel.hpp"

#include <algorithm>
#include <cassert>
#include <condition_variable>
#include <cstdio>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

#include "detcloud/merge.hpp"

namespace detcloud::kern {

using vm::StopReason;

struct Kernel::Sync {
    std::mutex mu;
    std::condition_variable cv;
};

namespace {

uint32_t stop_kind_code(const StopReason& s) {
    switch (s.kind) {
        case StopReason::Kind::Halt: return kStopHalt;
        case StopReason::Kind::Except: return kStopExcept;
        case StopReason::Kind::FuelOut: return kStopFuelOut;
        default: return kStopForced;
    }
}

}  // namespace

Kernel::Kernel(Kernel&&) noexcept = default;
Kernel& Kernel::operator=(Kernel&&) noexcept = default;
Kernel::~Kernel() = default;

Kernel::Kernel(const vm::GuestProgram& program, uint64_t fuel, KernelConfig config)
    : config_(config), sync_(std::make_unique<Sync>()) {
    root_ = std::make_unique<Process>();
    root_->id = "0";
    root_->space = mem::AddressSpace(config_.cow);
    program.load_into(root_->space);
    root_->regs.pc = program.entry;
    root_->fuel = fuel;
    root_->state = Process::State::Runnable;
    shared_pool_ = fuel;
}

void Kernel::overlay_root(uint32_t addr, std::span<const uint8_t> bytes) {
    root_->space.write_bytes(addr, bytes);
}

void Kernel::enqueue(Process* p) {
    assert(p->state == Process::State::Runnable);
    static thread_local uint64_t spread = 0;
    queues_[spread++ % queues_.size()].push_back(p);
    ready_count_++;
}

Process* Kernel::try_pop(int self, uint64_t& rng_state) {
    if (!queues_[self].empty()) {
        Process* p = queues_[self].back();
        queues_[self].pop_back();
        ready_count_--;
        return p;
    }
    // steal in seed-driven victim order
    size_t w = queues_.size();
    rng_state = mix64(rng_state);
    for (size_t k = 0; k < w; k++) {
        size_t victim = (rng_state + k) % w;
        if (!queues_[victim].empty()) {
            Process* p = queues_[victim].front();
            queues_[victim].erase(queues_[victim].begin());
            ready_count_--;
            return p;
        }
    }
    return nullptr;
}

void Kernel::run() {
    int w = std::max(1, config_.workers);
    queues_.assign(size_t(w), {});
    done_ = false;
    {
        std::lock_guard<std::mutex> lock(sync_->mu);
        if (root_->state == Process::State::Runnable) enqueue(root_.get());
    }
    std::vector<std::thread> threads;
    threads.reserve(size_t(w));
    for (int i = 0; i < w; i++) threads.emplace_back([this, i] { worker_loop(i); });
    for (auto& t : threads) t.join();

    // quiescence sanity: every waiting process must be waiting on a child
    // that has not stopped, and the root must have stopped
    std::function<void(const Process&)> check = [&](const Process& p) {
        if (p.state == Process::State::Waiting) {
            const Process* c =
                p.waiting_child < p.children.size() ? p.children[p.waiting_child].get() : nullptr;
            if (!c || c->state == Process::State::Stopped)
                throw std::logic_error("kernel bug: lost wakeup on " + p.id);
        }
        for (const auto& c : p.children) check(*c);
    };
    check(*root_);
    if (root_->state != Process::State::Stopped)
        throw std::logic_error("guest deadlock: root never stopped");
}

void Kernel::worker_loop(int index) {
    std::unique_lock<std::mutex> lock(sync_->mu);
    uint64_t rng_state = mix64(config_.seed ^ (0x517cc1b727220a95ull * uint64_t(index + 1)));
    std::mt19937_64 stall_rng(mix64(rng_state));

    for (;;) {
        if (done_) return;
        Process* p = try_pop(index, rng_state);
        if (!p) {
            if (executing_count_ == 0 && ready_count_ == 0) {
                done_ = true;
                sync_->cv.notify_all();
                return;
            }
            sync_->cv.wait(lock);
            continue;
        }

        uint64_t budget = std::min<uint64_t>(config_.slice, p->fuel);
        if (config_.mutation == Mutation::SharedFuel) budget = std::min(budget, shared_pool_);
        if (budget == 0) {
            handle_stop(p, {StopReason::Kind::FuelOut, 0});
            sync_->cv.notify_all();
            continue;
        }

        p->executing = true;
        executing_count_++;
        lock.unlock();

        if (config_.max_stall_us > 0)
            std::this_thread::sleep_for(
                std::chrono::microseconds(stall_rng() % config_.max_stall_us));

        vm::RunResult res = vm::run_slice(p->regs, p->space, budget);

        lock.lock();
        p->executing = false;
        executing_count_--;
        p->fuel -= res.retired;
        total_retired_ += res.retired;
        if (config_.mutation == Mutation::SharedFuel)
            shared_pool_ -= std::min(shared_pool_, res.retired);

        switch (res.stop.kind) {
            case StopReason::Kind::Running:
                if (p->fuel == 0 ||
                    (config_.mutation == Mutation::SharedFuel && shared_pool_ == 0)) {
                    handle_stop(p, {StopReason::Kind::FuelOut, 0});
                } else {
                    enqueue(p);
                }
                break;
            case StopReason::Kind::Syscall:
                handle_syscall(p);
                break;
            default:
                handle_stop(p, res.stop);
                break;
        }
        sync_->cv.notify_all();
    }
}

void Kernel::handle_stop(Process* p, StopReason reason) {
    p->state = Process::State::Stopped;
    p->stop = reason;

    Process* parent = p->parent;
    if (parent && parent->state == Process::State::Waiting &&
        parent->child_at(parent->waiting_child) == p) {
        SyscallRequest req = SyscallRequest::from_regs(parent->regs);
        complete_transfer(parent, p, req);
        parent->state = Process::State::Runnable;
        enqueue(parent);
    }
}

SysStatus Kernel::validate(const SyscallRequest& req) const {
    bool put = req.selector == kSysPut;
    if (put && (req.opts & kOptMerge)) return SysStatus::BadReq;
    if (!put && (req.opts & (kOptSnap | kOptStart | kOptZero))) return SysStatus::BadReq;
    if ((req.opts & kOptMerge) && (req.opts & kOptCopyRegs)) return SysStatus::BadReq;
    if ((req.opts & kOptMerge) && req.whole_space()) return SysStatus::BadReq;
    if ((req.local | req.remote | req.len) & 3) return SysStatus::Range;
    if (uint64_t(req.local) + req.len > (1ull << 32)) return SysStatus::Range;
    if (uint64_t(req.remote) + req.len > (1ull << 32)) return SysStatus::Range;
    return SysStatus::Ok;
}

void Kernel::handle_syscall(Process* p) {
    SyscallRequest req = SyscallRequest::from_regs(p->regs);

    if (req.selector == kSysRet) {
        trace_syscall(p, req, SysStatus::Ok);
        handle_stop(p, {StopReason::Kind::Halt, p->regs.r[1]});
        return;
    }
    if (req.selector != kSysPut && req.selector != kSysGet) {
        p->regs.r[0] = uint32_t(SysStatus::BadReq);
        trace_syscall(p, req, SysStatus::BadReq);
        enqueue(p);
        return;
    }

    SysStatus status = validate(req);
    if (status != SysStatus::Ok) {
        p->regs.r[0] = uint32_t(status);
        trace_syscall(p, req, status);
        enqueue(p);
        return;
    }

    // a PUT to the next unused index creates a fresh, empty, stopped child
    if (req.selector == kSysPut && req.child == p->children.size() &&
        p->children.size() < 1024) {
        auto fresh = std::make_unique<Process>();
        fresh->id = p->id + "." + std::to_string(p->children.size());
        fresh->parent = p;
        fresh->space = mem::AddressSpace(config_.cow);
        fresh->state = Process::State::Stopped;
        fresh->stop = {StopReason::Kind::Forced, 0};
        p->children.push_back(std::move(fresh));
    }
    Process* child = p->child_at(req.child);
    if (!child) {
        p->regs.r[0] = uint32_t(SysStatus::BadChild);
        trace_syscall(p, req, SysStatus::BadChild);
        enqueue(p);
        return;
    }

    bool live_merge = config_.mutation == Mutation::LiveMerge && req.selector == kSysGet &&
                      (req.opts & kOptMerge) && !child->executing;
    if (child->state == Process::State::Stopped || live_merge) {
        complete_transfer(p, child, req);
        enqueue(p);
        return;
    }
    p->state = Process::State::Waiting;
    p->waiting_child = req.child;
}

void Kernel::complete_transfer(Process* parent, Process* child, const SyscallRequest& req) {
    uint64_t pre_hash = config_.checker ? isolation_hash_except(parent, child) : 0;

    // fuel granted to the child flows back when the parent next syncs on it
    if (child->state == Process::State::Stopped) {
        parent->fuel += child->fuel;
        child->fuel = 0;
    }

    SysStatus status = SysStatus::Ok;
    if (req.selector == kSysPut) {
        if (req.opts & kOptZero) child->space.clear();
        if (req.len > 0) {
            if (req.whole_space())
                child->space = parent->space.clone();
            else
                mem::AddressSpace::copy_range(child->space, req.remote, parent->space, req.local,
                                              req.len);
        }
        if (req.opts & kOptCopyRegs) child->regs = parent->regs;  // pc already past the SYS
        if (req.opts & kOptSnap) child->snapshot = child->space.clone();
        if (req.opts & kOptStart) {
            uint64_t grant = std::min(req.limit, parent->fuel);
            if (config_.mutation != Mutation::SharedFuel) parent->fuel -= grant;
            child->fuel = grant;
            if (grant == 0) {
                child->state = Process::State::Stopped;
                child->stop = {StopReason::Kind::FuelOut, 0};
            } else {
                child->state = Process::State::Runnable;
                enqueue(child);
            }
        }
    } else {  // GET
        if (req.opts & kOptMerge) {
            if (!child->snapshot) {
                status = SysStatus::NoSnap;
            } else {
                mem::MergeResult res = merge_region(parent->space, req.local, child->space,
                                                    req.remote, *child->snapshot, req.len);
                parent->last_conflicts = res.conflict_addrs;
                if (res.conflict()) {
                    status = SysStatus::Conflict;
                    parent->regs.r[1] = uint32_t(res.conflict_addrs.size());
                    parent->regs.r[2] = res.conflict_addrs.front();
                }
            }
        } else if (req.len > 0) {
            if (req.whole_space())
                parent->space = child->space.clone();
            else
                mem::AddressSpace::copy_range(parent->space, req.local, child->space, req.remote,
                                              req.len);
        }
        if (req.opts & kOptCopyRegs) {
            parent->regs.r[1] = stop_kind_code(child->stop);
            parent->regs.r[2] = child->stop.code;
        }
    }
    parent->regs.r[0] = uint32_t(status);
    trace_syscall(parent, req, status);

    if (config_.checker) {
        uint64_t post_hash = isolation_hash_except(parent, child);
        if (pre_hash != post_hash)
            throw std::logic_error("isolation violated by a syscall in " + parent->id);
    }
}

void Kernel::trace_syscall(Process* p, const SyscallRequest& req, SysStatus status) {
    if (!config_.trace) return;
    char buf[160];
    if (req.selector == kSysRet) {
        std::snprintf(buf, sizeof buf, "%s ret code=%u", p->id.c_str(), p->regs.r[1]);
    } else {
        std::snprintf(buf, sizeof buf,
                      "%s %s child=%u local=%08x remote=%08x len=%08x opts=%02x status=%u",
                      p->id.c_str(), req.selector == kSysPut ? "put" : "get", req.child,
                      req.local, req.remote, req.len, req.opts, uint32_t(status));
    }
    p->events.emplace_back(buf);
}

uint64_t Kernel::isolation_hash_except(const Process* a, const Process* b) const {
    Fnv64 h;
    std::function<void(const Process&)> visit = [&](const Process& p) {
        if (&p != a && &p != b) {
            h.str(p.id);
            h.u64(p.space.content_hash());
            for (uint32_t r : p.regs.r) h.u32(r);
            h.u32(p.regs.pc);
        }
        for (const auto& c : p.children) visit(*c);
    };
    visit(*root_);
    return h.value();
}

uint64_t Kernel::tree_hash() const {
    Fnv64 h;
    std::function<void(const Process&)> visit = [&](const Process& p) {
        h.str(p.id);
        h.u32(uint32_t(p.state));
        h.u32(uint32_t(p.stop.kind));
        h.u32(p.stop.code);
        for (uint32_t r : p.regs.r) h.u32(r);
        h.u32(p.regs.pc);
        h.u64(p.fuel);
        h.u64(p.space.content_hash());
        h.u64(p.children.size());
        for (const auto& c : p.children) visit(*c);
    };
    visit(*root_);
    return h.value();
}

std::string Kernel::event_log() const {
    std::string out;
    std::function<void(const Process&)> visit = [&](const Process& p) {
        for (const auto& e : p.events) {
            out += e;
            out += '\n';
        }
        for (const auto& c : p.children) visit(*c);
    };
    visit(*root_);
    return out;
}

}  // namespace detcloud::kern
