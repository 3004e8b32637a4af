#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "detcloud/address_space.hpp"
#include "detcloud/isa.hpp"

namespace detcloud::vm {

enum class ExceptKind : uint32_t {
    DivZero = 1,
    Illegal = 2,
    Misalign = 3,
    Fault = 4,  // reserved; the flat 32-bit space cannot fault today
};

struct StopReason {
    enum class Kind : uint8_t {
        Running = 0,  // not stopped (slice budget ran out before the fuel did)
        Syscall,      // SYS executed; request is in r0..r7
        Halt,         // HALT or a RET translated by the kernel; code attached
        Except,       // trap; code is an ExceptKind
        FuelOut,
        Forced,  // never started, or stopped by the kernel
    };
    Kind kind = Kind::Running;
    uint32_t code = 0;

    bool stopped() const { return kind != Kind::Running; }
    bool operator==(const StopReason&) const = default;
};

std::string to_string(const StopReason& s);

struct Registers {
    std::array<uint32_t, kNumRegs> r{};
    uint32_t pc = 0;

    bool operator==(const Registers&) const = default;
};

struct RunResult {
    StopReason stop;
    uint64_t retired = 0;
};

// Execute exactly one instruction. Every instruction, including one that
// traps, retires and costs one fuel unit. Traps leave registers and pc
// untouched; SYS and HALT leave pc past themselves.
StopReason step(Registers& regs, mem::AddressSpace& space);

// Execute until the program stops or max_steps instructions retire. A
// Running result means the slice ended mid-flight. Bit-identical to folding
// step() the same number of times.
RunResult run_slice(Registers& regs, mem::AddressSpace& space, uint64_t max_steps);

// As run_slice with max_steps = fuel, but exhaustion is reported as FuelOut:
// retired == min(fuel, natural instruction count).
RunResult run_until_stop(Registers& regs, mem::AddressSpace& space, uint64_t fuel);

}  // namespace detcloud::vm
