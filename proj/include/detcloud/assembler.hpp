#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "detcloud/program.hpp"

namespace detcloud::vm {

struct AsmError : std::runtime_error {
    AsmError(std::string file, int line, const std::string& msg)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + msg),
          file(std::move(file)),
          line(line) {}
    std::string file;
    int line;
};

// Two-pass assembler for the guest ISA. Grammar: docs/isa.md. `.include` is
// resolved relative to the including file (or `include_dir` for string
// sources). Identical input yields identical bytes.
GuestProgram assemble_file(const std::string& path);
GuestProgram assemble_string(const std::string& source, const std::string& name = "<input>",
                             const std::string& include_dir = ".");

// Canonical listing that reassembles to the same bytes: decodable words as
// instructions, everything else as .word.
std::string disassemble(const std::vector<uint8_t>& code, uint32_t base_addr);

}  // namespace detcloud::vm
