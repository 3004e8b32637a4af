#include "detcloud/isa.hpp"

#include <array>

namespace detcloud::vm {

bool op_imm_sign_extends(Op op) {
    switch (op) {
        case Op::And:
        case Op::Or:
        case Op::Xor:
        case Op::Shl:
        case Op::Shr:
        case Op::Divu:
        case Op::Halt:
        case Op::Loadi:
            return false;
        default:
            return true;
    }
}

uint32_t encode(const Instr& ins) {
    uint32_t w = uint32_t(ins.op) & 0x7f;
    if (ins.imm_form) w |= 0x80;
    w |= uint32_t(ins.rd & 0xf) << 8;
    w |= uint32_t(ins.rs1 & 0xf) << 12;
    if (ins.imm_form)
        w |= uint32_t(ins.imm) << 16;
    else
        w |= uint32_t(ins.rs2 & 0xf) << 16;
    return w;
}

Instr decode(uint32_t word) {
    Instr ins;
    uint8_t opbyte = word & 0xff;
    ins.imm_form = (opbyte & 0x80) != 0;
    uint8_t opnum = opbyte & 0x7f;
    ins.op = opnum < uint8_t(Op::OpCount_) ? Op(opnum) : Op::Illegal;
    ins.rd = (word >> 8) & 0xf;
    ins.rs1 = (word >> 12) & 0xf;
    ins.rs2 = (word >> 16) & 0xf;
    ins.imm = uint16_t(word >> 16);
    return ins;
}

namespace {
constexpr std::array<std::string_view, size_t(Op::OpCount_)> kNames = {
    "illegal", "halt", "loadi", "load", "store", "add", "sub",  "mul",  "divu", "and",
    "or",      "xor",  "shl",   "shr",  "beq",   "bne", "bltu", "jmp",  "jal",  "sys",
};
}

std::string_view op_name(Op op) { return kNames[size_t(op)]; }

std::optional<Op> op_from_name(std::string_view name) {
    for (size_t i = 1; i < kNames.size(); i++)
        if (kNames[i] == name) return Op(i);
    return std::nullopt;
}

}  // namespace detcloud::vm
