#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "detcloud/common.hpp"

namespace detcloud::vm {

// Fixed 4-byte instruction word, little endian:
//
//   byte 0   bit 7: I flag (1 = second source is imm16, 0 = register)
//            bits 6..0: opcode
//   byte 1   bits 3..0: rd    bits 7..4: rs1
//   bytes 2,3  imm16 (I=1) or rs2 in the low nibble of byte 2 (I=0)
//
// Branches compare rd against rs1 and require the I form; their imm16 is a
// signed word offset relative to the following instruction. Opcode 0 is
// deliberately unassigned so a zero word (untouched memory) traps ILLEGAL.
enum class Op : uint8_t {
    Illegal = 0,
    Halt = 1,   // stop with HALT(src2)
    Loadi = 2,  // rd := src2
    Load = 3,   // rd := mem32[rs1 + src2]
    Store = 4,  // mem32[rs1 + src2] := rd
    Add = 5,
    Sub = 6,
    Mul = 7,
    Divu = 8,  // divisor 0 traps DIVZERO
    And = 9,
    Or = 10,
    Xor = 11,
    Shl = 12,  // shift amount src2 & 31
    Shr = 13,  // logical
    Beq = 14,
    Bne = 15,
    Bltu = 16,
    Jmp = 17,  // I: pc-relative; reg form: pc := rs1
    Jal = 18,  // rd := pc+4, then as Jmp
    Sys = 19,  // stop with SYSCALL, request in r0..r7
    OpCount_
};

constexpr int kNumRegs = 8;

// ALU ops sign-extend their immediate except the logical group and DIVU,
// which zero-extend. Memory offsets sign-extend.
bool op_imm_sign_extends(Op op);

struct Instr {
    Op op = Op::Illegal;
    bool imm_form = false;
    uint8_t rd = 0;
    uint8_t rs1 = 0;
    uint8_t rs2 = 0;
    uint16_t imm = 0;

    uint32_t src2_value(const uint32_t* regs) const {
        if (!imm_form) return regs[rs2];
        if (op_imm_sign_extends(op)) return uint32_t(int32_t(int16_t(imm)));
        return imm;
    }
};

uint32_t encode(const Instr& ins);
Instr decode(uint32_t word);

std::string_view op_name(Op op);
std::optional<Op> op_from_name(std::string_view name);

}  // namespace detcloud::vm
