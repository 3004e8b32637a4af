#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "detcloud/assembler.hpp"
#include "detcloud/file_image.hpp"
#include "detcloud/kernel.hpp"
#include "detcloud/runtime_abi.hpp"

using namespace detcloud;
using namespace detcloud::kern;
using vm::StopReason;

namespace {

const std::string kGuests = DETCLOUD_GUESTS_DIR;

Kernel run_guest_file(const std::string& rel, uint64_t fuel, KernelConfig cfg = {}) {
    Kernel k(vm::assemble_file(kGuests + "/" + rel), fuel, cfg);
    k.run();
    return k;
}

}  // namespace

TEST_CASE("abi.inc agrees with the host mirror") {
    std::ifstream in(kGuests + "/runtime/abi.inc");
    REQUIRE(in.good());
    std::map<std::string, uint32_t> inc;
    std::string line;
    while (std::getline(in, line)) {
        size_t e = line.find(".equ ");
        if (e == std::string::npos) continue;
        size_t comma = line.find(',', e);
        if (comma == std::string::npos) continue;
        std::string name = line.substr(e + 5, comma - e - 5);
        std::string val = line.substr(comma + 1);
        if (size_t sc = val.find(';'); sc != std::string::npos) val.resize(sc);
        // strip blanks
        std::erase(name, ' ');
        std::erase(val, ' ');
        if (val.empty() || val.find_first_not_of("0123456789abcdefABCDEFx") != std::string::npos)
            continue;  // expression values are checked implicitly by execution
        inc[name] = uint32_t(std::stoull(val, nullptr, 0));
    }
    for (const auto& c : rtabi::abi_constants()) {
        INFO("constant ", c.name);
        auto it = inc.find(c.name);
        REQUIRE(it != inc.end());
        REQUIRE(it->second == c.value);
    }
}

TEST_CASE("fork child exits and wait reports it") {
    Kernel k = run_guest_file("t/fork_ret.s", 10'000'000);
    REQUIRE(k.root().stop.kind == StopReason::Kind::Halt);
    CHECK(k.root().stop.code == ((kStopHalt << 8) | 7));
}

TEST_CASE("tfork thread result and memory merge back at join") {
    Kernel k = run_guest_file("t/tfork_inc.s", 10'000'000);
    REQUIRE(k.root().stop.kind == StopReason::Kind::Halt);
    // counter 1+5 = 6 merged into the parent; thread returned 5+1
    CHECK(k.root().stop.code == ((6u << 8) | 6u));
}

TEST_CASE("guest file API round-trips bytes and appends odd lengths") {
    Kernel k = run_guest_file("t/file_rw.s", 10'000'000);
    REQUIRE(k.root().stop.kind == StopReason::Kind::Halt);
    CHECK(k.root().stop.code == ((8u << 8) | 1u));

    fs::FileImage img = fs::FileImage::from_space(k.root().space);
    REQUIRE(img.get("data") != nullptr);
    std::string data(img.get("data")->data.begin(), img.get("data")->data.end());
    CHECK(data == std::string("ABCDEFG\0", 8));
    REQUIRE(img.get("log") != nullptr);
    std::string log(img.get("log")->data.begin(), img.get("log")->data.end());
    CHECK(log == "L1\nL2##\n");
    CHECK(img.get("log")->append_only());
    CHECK(!img.get("data")->append_only());
}

TEST_CASE("fork/wait reconciles appends, parent records first") {
    Kernel k = run_guest_file("t/append_fork.s", 20'000'000);
    REQUIRE(k.root().stop == StopReason{StopReason::Kind::Halt, 0});  // no conflicts
    fs::FileImage img = fs::FileImage::from_space(k.root().space);
    REQUIRE(img.get("log") != nullptr);
    std::string log(img.get("log")->data.begin(), img.get("log")->data.end());
    CHECK(log == "P1\nP2\nc1\nc2\n");
}

TEST_CASE("double rewrite conflicts, blocks access, clears explicitly") {
    Kernel k = run_guest_file("t/conflict.s", 20'000'000);
    REQUIRE(k.root().stop.kind == StopReason::Kind::Halt);
    // conflicts=1, blocked open observed, clear succeeded, reopen succeeded
    CHECK(k.root().stop.code == ((1u << 12) | (1u << 8) | 16u | 1u));
    fs::FileImage img = fs::FileImage::from_space(k.root().space);
    std::string f(img.get("f")->data.begin(), img.get("f")->data.end());
    CHECK(f == "CCCC");  // parent content retained
}
