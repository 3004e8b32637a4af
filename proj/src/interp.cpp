#include "detcloud/interp.hpp"

#include <cstdio>

namespace detcloud::vm {

std::string to_string(const StopReason& s) {
    char buf[48];
    switch (s.kind) {
        case StopReason::Kind::Running:
            return "running";
        case StopReason::Kind::Syscall:
            return "syscall";
        case StopReason::Kind::Halt:
            std::snprintf(buf, sizeof buf, "halt %u", s.code);
            return buf;
        case StopReason::Kind::Except: {
            const char* k = "?";
            switch (ExceptKind(s.code)) {
                case ExceptKind::DivZero: k = "divzero"; break;
                case ExceptKind::Illegal: k = "illegal"; break;
                case ExceptKind::Misalign: k = "misalign"; break;
                case ExceptKind::Fault: k = "fault"; break;
            }
            std::snprintf(buf, sizeof buf, "except %s", k);
            return buf;
        }
        case StopReason::Kind::FuelOut:
            return "fuelout";
        case StopReason::Kind::Forced:
            return "forced";
    }
    return "?";
}

namespace {

// Per-run page caches. The space is exclusively ours while the VM runs, so
// pointers stay valid between syscalls; loads must go through the write slot
// first to observe stores that unshared a COW page.
struct Caches {
    uint32_t fetch_pn = ~0u;
    const uint32_t* fetch = nullptr;
    uint32_t read_pn = ~0u;
    const uint32_t* read = nullptr;
    uint32_t write_pn = ~0u;
    uint32_t* write = nullptr;
};

const mem::Page kZeroPage{};

inline const uint32_t* read_page(mem::AddressSpace& space, Caches& c, uint32_t pn) {
    if (pn == c.write_pn) return c.write;
    if (pn == c.read_pn) return c.read;
    const mem::Page* p = space.page(pn);
    c.read_pn = pn;
    c.read = p ? p->words.data() : kZeroPage.words.data();
    return c.read;
}

inline uint32_t* write_page(mem::AddressSpace& space, Caches& c, uint32_t pn) {
    if (pn == c.write_pn) return c.write;
    c.write = space.page_for_write(pn)->words.data();
    c.write_pn = pn;
    if (c.read_pn == pn) {  // the read slot may hold the pre-unshare page
        c.read = c.write;
    }
    if (c.fetch_pn == pn) {
        c.fetch = c.write;
    }
    return c.write;
}

inline RunResult run_impl(Registers& regs, mem::AddressSpace& space, uint64_t max_steps) {
    Caches c;
    uint64_t retired = 0;
    auto& r = regs.r;

    while (retired < max_steps) {
        uint32_t pc = regs.pc;
        if (pc & 3) {
            retired++;
            return {{StopReason::Kind::Except, uint32_t(ExceptKind::Misalign)}, retired};
        }
        uint32_t pn = pc >> kPageShift;
        if (pn != c.fetch_pn) {
            if (pn == c.write_pn) {
                c.fetch = c.write;
            } else {
                const mem::Page* p = space.page(pn);
                c.fetch = p ? p->words.data() : kZeroPage.words.data();
            }
            c.fetch_pn = pn;
        }
        uint32_t word = c.fetch[(pc & (kPageSize - 1)) >> 2];

        Instr ins = decode(word);
        uint32_t src2 = ins.src2_value(r.data());
        retired++;

        switch (ins.op) {
            case Op::Illegal:
                return {{StopReason::Kind::Except, uint32_t(ExceptKind::Illegal)}, retired};
            case Op::Halt:
                regs.pc = pc + 4;
                return {{StopReason::Kind::Halt, src2}, retired};
            case Op::Sys:
                regs.pc = pc + 4;
                return {{StopReason::Kind::Syscall, 0}, retired};
            case Op::Loadi:
                r[ins.rd] = src2;
                break;
            case Op::Load: {
                uint32_t addr = r[ins.rs1] + src2;
                if (addr & 3)
                    return {{StopReason::Kind::Except, uint32_t(ExceptKind::Misalign)}, retired};
                r[ins.rd] = read_page(space, c, addr >> kPageShift)[(addr & (kPageSize - 1)) >> 2];
                break;
            }
            case Op::Store: {
                uint32_t addr = r[ins.rs1] + src2;
                if (addr & 3)
                    return {{StopReason::Kind::Except, uint32_t(ExceptKind::Misalign)}, retired};
                write_page(space, c, addr >> kPageShift)[(addr & (kPageSize - 1)) >> 2] = r[ins.rd];
                break;
            }
            case Op::Add: r[ins.rd] = r[ins.rs1] + src2; break;
            case Op::Sub: r[ins.rd] = r[ins.rs1] - src2; break;
            case Op::Mul: r[ins.rd] = r[ins.rs1] * src2; break;
            case Op::Divu:
                if (src2 == 0)
                    return {{StopReason::Kind::Except, uint32_t(ExceptKind::DivZero)}, retired};
                r[ins.rd] = r[ins.rs1] / src2;
                break;
            case Op::And: r[ins.rd] = r[ins.rs1] & src2; break;
            case Op::Or: r[ins.rd] = r[ins.rs1] | src2; break;
            case Op::Xor: r[ins.rd] = r[ins.rs1] ^ src2; break;
            case Op::Shl: r[ins.rd] = r[ins.rs1] << (src2 & 31); break;
            case Op::Shr: r[ins.rd] = r[ins.rs1] >> (src2 & 31); break;
            case Op::Beq:
            case Op::Bne:
            case Op::Bltu: {
                if (!ins.imm_form)
                    return {{StopReason::Kind::Except, uint32_t(ExceptKind::Illegal)}, retired};
                uint32_t a = r[ins.rd];
                uint32_t b = r[ins.rs1];
                bool take = ins.op == Op::Beq ? a == b : ins.op == Op::Bne ? a != b : a < b;
                if (take) {
                    regs.pc = pc + 4 + uint32_t(int32_t(int16_t(ins.imm))) * 4;
                    continue;
                }
                break;
            }
            case Op::Jmp:
                regs.pc = ins.imm_form ? pc + 4 + uint32_t(int32_t(int16_t(ins.imm))) * 4 : r[ins.rs1];
                continue;
            case Op::Jal: {
                uint32_t target = ins.imm_form ? pc + 4 + uint32_t(int32_t(int16_t(ins.imm))) * 4
                                               : r[ins.rs1];
                r[ins.rd] = pc + 4;
                regs.pc = target;
                continue;
            }
            default:
                return {{StopReason::Kind::Except, uint32_t(ExceptKind::Illegal)}, retired};
        }
        regs.pc = pc + 4;
    }
    return {{StopReason::Kind::Running, 0}, retired};
}

}  // namespace

StopReason step(Registers& regs, mem::AddressSpace& space) {
    return run_impl(regs, space, 1).stop;
}

RunResult run_slice(Registers& regs, mem::AddressSpace& space, uint64_t max_steps) {
    return run_impl(regs, space, max_steps);
}

RunResult run_until_stop(Registers& regs, mem::AddressSpace& space, uint64_t fuel) {
    RunResult res = run_impl(regs, space, fuel);
    if (!res.stop.stopped()) res.stop = {StopReason::Kind::FuelOut, 0};
    return res;
}

}  // namespace detcloud::vm
