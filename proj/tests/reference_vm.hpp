#pragma once

// Test-only reference interpreter, written straight off docs/isa.md with no
// shared code paths with src/interp.cpp. Used as the oracle for fuel and
// semantics equivalence.

#include <cstdint>
#include <unordered_map>

#include "detcloud/interp.hpp"

namespace refvm {

struct Machine {
    uint32_t r[8] = {};
    uint32_t pc = 0;
    std::unordered_map<uint32_t, uint32_t> mem;  // word-addressed

    uint32_t load(uint32_t addr) const {
        auto it = mem.find(addr >> 2);
        return it == mem.end() ? 0 : it->second;
    }
    void store(uint32_t addr, uint32_t v) { mem[addr >> 2] = v; }
};

using Stop = detcloud::vm::StopReason;
using Kind = detcloud::vm::StopReason::Kind;
using Exc = detcloud::vm::ExceptKind;

inline Stop step(Machine& m) {
    if (m.pc & 3) return {Kind::Except, uint32_t(Exc::Misalign)};
    uint32_t w = m.load(m.pc);
    uint32_t opnum = w & 0x7f;
    bool imm_form = (w & 0x80) != 0;
    uint32_t rd = (w >> 8) & 0xf;
    uint32_t rs1 = (w >> 12) & 0xf;
    uint32_t rs2 = (w >> 16) & 0xf;
    uint16_t imm = uint16_t(w >> 16);

    auto sext = [&] { return uint32_t(int32_t(int16_t(imm))); };
    auto zext = [&] { return uint32_t(imm); };

    enum {
        ILL = 0, HALT, LOADI, LOAD, STORE, ADD, SUB, MUL, DIVU, AND, OR, XOR,
        SHL, SHR, BEQ, BNE, BLTU, JMP, JAL, SYS, COUNT
    };
    if (opnum >= COUNT) return {Kind::Except, uint32_t(Exc::Illegal)};

    uint32_t src2;
    switch (opnum) {  // logical group, DIVU, HALT and LOADI zero-extend
        case AND: case OR: case XOR: case SHL: case SHR: case DIVU: case HALT: case LOADI:
            src2 = imm_form ? zext() : m.r[rs2];
            break;
        default:
            src2 = imm_form ? sext() : m.r[rs2];
    }

    uint32_t next = m.pc + 4;
    switch (opnum) {
        case ILL: return {Kind::Except, uint32_t(Exc::Illegal)};
        case HALT: m.pc = next; return {Kind::Halt, src2};
        case SYS: m.pc = next; return {Kind::Syscall, 0};
        case LOADI: m.r[rd] = src2; break;
        case LOAD: {
            uint32_t a = m.r[rs1] + src2;
            if (a & 3) return {Kind::Except, uint32_t(Exc::Misalign)};
            m.r[rd] = m.load(a);
            break;
        }
        case STORE: {
            uint32_t a = m.r[rs1] + src2;
            if (a & 3) return {Kind::Except, uint32_t(Exc::Misalign)};
            m.store(a, m.r[rd]);
            break;
        }
        case ADD: m.r[rd] = m.r[rs1] + src2; break;
        case SUB: m.r[rd] = m.r[rs1] - src2; break;
        case MUL: m.r[rd] = m.r[rs1] * src2; break;
        case DIVU:
            if (src2 == 0) return {Kind::Except, uint32_t(Exc::DivZero)};
            m.r[rd] = m.r[rs1] / src2;
            break;
        case AND: m.r[rd] = m.r[rs1] & src2; break;
        case OR: m.r[rd] = m.r[rs1] | src2; break;
        case XOR: m.r[rd] = m.r[rs1] ^ src2; break;
        case SHL: m.r[rd] = m.r[rs1] << (src2 & 31); break;
        case SHR: m.r[rd] = m.r[rs1] >> (src2 & 31); break;
        case BEQ: case BNE: case BLTU: {
            if (!imm_form) return {Kind::Except, uint32_t(Exc::Illegal)};
            uint32_t a = m.r[rd], b = m.r[rs1];
            bool take = opnum == BEQ ? a == b : opnum == BNE ? a != b : a < b;
            if (take) next = m.pc + 4 + sext() * 4;
            break;
        }
        case JMP:
            next = imm_form ? m.pc + 4 + sext() * 4 : m.r[rs1];
            break;
        case JAL: {
            uint32_t t = imm_form ? m.pc + 4 + sext() * 4 : m.r[rs1];
            m.r[rd] = m.pc + 4;
            next = t;
            break;
        }
    }
    m.pc = next;
    return {Kind::Running, 0};
}

// Runs to a stop or fuel exhaustion; returns (stop, retired).
inline std::pair<Stop, uint64_t> run(Machine& m, uint64_t fuel) {
    uint64_t retired = 0;
    while (retired < fuel) {
        Stop s = step(m);
        retired++;
        if (s.kind != Kind::Running) return {s, retired};
    }
    return {{Kind::FuelOut, 0}, retired};
}

}  // namespace refvm
