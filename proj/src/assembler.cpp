#include "detcloud/assembler.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "detcloud/isa.hpp"

namespace detcloud::vm {

namespace {

namespace fs = std::filesystem;

struct SrcLine {
    std::string file;
    int line;
    std::string text;
};

[[noreturn]] void fail(const SrcLine& at, const std::string& msg) {
    throw AsmError(at.file, at.line, msg);
}

std::string read_file(const std::string& path, const SrcLine* at) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (at) fail(*at, "cannot open include '" + path + "'");
        throw AsmError(path, 0, "cannot open file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Flattens .include directives into one line stream, keeping origin info.
void gather_lines(const std::string& text, const std::string& name, const std::string& dir,
                  std::vector<SrcLine>& out, int depth) {
    if (depth > 16) throw AsmError(name, 0, "include nesting too deep");
    std::istringstream ss(text);
    std::string line;
    int num = 0;
    while (std::getline(ss, line)) {
        num++;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed = line;
        size_t b = trimmed.find_first_not_of(" \t");
        if (b != std::string::npos && trimmed.compare(b, 8, ".include") == 0) {
            SrcLine at{name, num, line};
            size_t q0 = trimmed.find('"', b);
            size_t q1 = q0 == std::string::npos ? std::string::npos : trimmed.find('"', q0 + 1);
            if (q1 == std::string::npos) fail(at, ".include expects a quoted path");
            fs::path inc = fs::path(dir) / trimmed.substr(q0 + 1, q1 - q0 - 1);
            gather_lines(read_file(inc.string(), &at), inc.string(),
                         inc.parent_path().string(), out, depth + 1);
            continue;
        }
        out.push_back({name, num, line});
    }
}

// ---- expressions ------------------------------------------------------

struct ExprCtx {
    const std::map<std::string, int64_t>* symbols;  // null: literals only
    const SrcLine* at;
    bool* unresolved;  // set instead of failing when a symbol is unknown
};

bool is_sym_char(char c) { return std::isalnum(uint8_t(c)) || c == '_' || c == '.'; }

struct ExprParser {
    std::string_view s;
    size_t pos = 0;
    const ExprCtx& ctx;

    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) pos++;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            pos++;
            return true;
        }
        return false;
    }
    bool eat2(const char* two) {
        skip_ws();
        if (pos + 1 < s.size() && s[pos] == two[0] && s[pos + 1] == two[1]) {
            pos += 2;
            return true;
        }
        return false;
    }
    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }

    int64_t parse() {
        int64_t v = level_or();
        skip_ws();
        if (pos != s.size()) fail(*ctx.at, "trailing input in expression: '" + std::string(s.substr(pos)) + "'");
        return v;
    }
    int64_t level_or() {
        int64_t v = level_xor();
        while (peek() == '|') {
            pos++;
            v |= level_xor();
        }
        return v;
    }
    int64_t level_xor() {
        int64_t v = level_and();
        while (peek() == '^') {
            pos++;
            v ^= level_and();
        }
        return v;
    }
    int64_t level_and() {
        int64_t v = level_shift();
        while (peek() == '&') {
            pos++;
            v &= level_shift();
        }
        return v;
    }
    int64_t level_shift() {
        int64_t v = level_add();
        for (;;) {
            if (eat2("<<"))
                v = int64_t(uint64_t(v) << (level_add() & 63));
            else if (eat2(">>"))
                v = int64_t(uint64_t(v) >> (level_add() & 63));
            else
                return v;
        }
    }
    int64_t level_add() {
        int64_t v = level_mul();
        for (;;) {
            skip_ws();
            if (eat('+'))
                v += level_mul();
            else if (pos < s.size() && s[pos] == '-') {
                pos++;
                v -= level_mul();
            } else
                return v;
        }
    }
    int64_t level_mul() {
        int64_t v = unary();
        for (;;) {
            if (eat('*'))
                v *= unary();
            else if (peek() == '/') {
                pos++;
                int64_t d = unary();
                if (d == 0) fail(*ctx.at, "division by zero in expression");
                v /= d;
            } else
                return v;
        }
    }
    int64_t unary() {
        skip_ws();
        if (eat('-')) return -unary();
        if (eat('~')) return ~unary();
        return primary();
    }
    int64_t primary() {
        skip_ws();
        if (pos >= s.size()) fail(*ctx.at, "expected expression");
        if (eat('(')) {
            int64_t v = level_or();
            if (!eat(')')) fail(*ctx.at, "missing ')'");
            return v;
        }
        char c = s[pos];
        if (c == '\'') {
            if (pos + 2 < s.size() && s[pos + 1] == '\\' && s[pos + 3] == '\'') {
                char e = s[pos + 2];
                pos += 4;
                switch (e) {
                    case 'n': return '\n';
                    case 't': return '\t';
                    case '0': return 0;
                    case '\\': return '\\';
                    case '\'': return '\'';
                    default: fail(*ctx.at, "bad escape in char literal");
                }
            }
            if (pos + 2 < s.size() && s[pos + 2] == '\'') {
                int64_t v = uint8_t(s[pos + 1]);
                pos += 3;
                return v;
            }
            fail(*ctx.at, "bad char literal");
        }
        if (std::isdigit(uint8_t(c))) {
            size_t end = pos;
            int base = 10;
            if (c == '0' && pos + 1 < s.size() && (s[pos + 1] == 'x' || s[pos + 1] == 'X')) {
                base = 16;
                end = pos + 2;
            }
            size_t start = base == 16 ? pos + 2 : pos;
            while (end < s.size() && (std::isalnum(uint8_t(s[end])) || s[end] == '_')) end++;
            std::string digits;
            for (size_t i = start; i < end; i++)
                if (s[i] != '_') digits += s[i];
            pos = end;
            try {
                return int64_t(std::stoull(digits, nullptr, base));
            } catch (...) {
                fail(*ctx.at, "bad number literal");
            }
        }
        if (is_sym_char(c) && !std::isdigit(uint8_t(c))) {
            size_t end = pos;
            while (end < s.size() && is_sym_char(s[end])) end++;
            std::string name(s.substr(pos, end - pos));
            pos = end;
            if (ctx.symbols) {
                auto it = ctx.symbols->find(name);
                if (it != ctx.symbols->end()) return it->second;
            }
            if (ctx.unresolved) {
                *ctx.unresolved = true;
                return 0;
            }
            fail(*ctx.at, "undefined symbol '" + name + "'");
        }
        fail(*ctx.at, std::string("unexpected character '") + c + "' in expression");
    }
};

int64_t eval(std::string_view expr, const std::map<std::string, int64_t>& symbols,
             const SrcLine& at) {
    ExprCtx ctx{&symbols, &at, nullptr};
    ExprParser p{expr, 0, ctx};
    return p.parse();
}

// Pass-1 evaluation: forward references resolve to 0 with the flag set.
int64_t try_eval(std::string_view expr, const std::map<std::string, int64_t>& symbols,
                 const SrcLine& at, bool& unresolved) {
    ExprCtx ctx{&symbols, &at, &unresolved};
    ExprParser p{expr, 0, ctx};
    return p.parse();
}

// ---- statements -------------------------------------------------------

struct Operand {
    bool is_reg = false;
    uint8_t reg = 0;
    std::string expr;
};

struct Stmt {
    SrcLine at;
    std::string mnem;  // instruction/pseudo, or ".word" etc.
    std::vector<Operand> ops;
    std::vector<std::string> raw_args;  // for directives
    std::string str_arg;                // .ascii/.asciiz payload
    uint32_t addr = 0;
    uint32_t size = 0;
};

std::optional<uint8_t> parse_reg(std::string_view tok) {
    if (tok == "sp") return 7;
    if (tok == "ra") return 5;
    if (tok.size() == 2 && tok[0] == 'r' && tok[1] >= '0' && tok[1] <= '7')
        return uint8_t(tok[1] - '0');
    return std::nullopt;
}

std::string trim(std::string s) {
    size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// Splits on commas that are outside char literals / parens.
std::vector<std::string> split_args(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    bool in_char = false, in_str = false;
    for (size_t i = 0; i < s.size(); i++) {
        char c = s[i];
        if (in_str) {
            cur += c;
            if (c == '"' && s[i - 1] != '\\') in_str = false;
            continue;
        }
        if (in_char) {
            cur += c;
            if (c == '\'' && s[i - 1] != '\\') in_char = false;
            continue;
        }
        if (c == '"') in_str = true;
        if (c == '\'') in_char = true;
        if (c == '(') depth++;
        if (c == ')') depth--;
        if (c == ',' && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
            continue;
        }
        cur += c;
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    return out;
}

std::string decode_string_literal(const std::string& raw, const SrcLine& at) {
    if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"')
        fail(at, "expected a quoted string");
    std::string out;
    for (size_t i = 1; i + 1 < raw.size(); i++) {
        char c = raw[i];
        if (c != '\\') {
            out += c;
            continue;
        }
        if (i + 2 >= raw.size() + 1) fail(at, "trailing backslash in string");
        char e = raw[++i];
        switch (e) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case '0': out += '\0'; break;
            case '\\': out += '\\'; break;
            case '"': out += '"'; break;
            default: fail(at, "bad escape in string");
        }
    }
    return out;
}

struct Assembler {
    std::map<std::string, int64_t> symbols;
    std::vector<Stmt> stmts;
    uint32_t entry = 0;
    bool entry_set = false;
    std::string entry_sym;
    SrcLine entry_at;

    // pass 2 output: emission-ordered contiguous runs
    std::vector<std::pair<uint32_t, std::vector<uint8_t>>> runs;

    void define(const std::string& name, int64_t v, const SrcLine& at) {
        if (symbols.count(name)) fail(at, "duplicate symbol '" + name + "'");
        symbols[name] = v;
    }

    uint32_t stmt_size(Stmt& st) {
        const std::string& m = st.mnem;
        if (m == "li") {
            if (st.ops.size() != 2 || !st.ops[0].is_reg || st.ops[1].is_reg)
                fail(st.at, "li expects 'li rd, expr'");
            bool fwd = false;
            int64_t v = try_eval(st.ops[1].expr, symbols, st.at, fwd);
            if (fwd) return 12;  // forward reference: worst-case form
            uint32_t u = uint32_t(v);
            if (u <= 0xffff) return 4;
            if ((u & 0xffff) == 0) return 8;
            return 12;
        }
        if (m == "push" || m == "pop") return 8;
        if (m == "call") {
            // short pc-relative form when the target is known and close;
            // li r6, target + jal r5, r6 otherwise
            if (st.ops.size() != 1 || st.ops[0].is_reg) fail(st.at, "call expects a target");
            bool fwd = false;
            int64_t target = try_eval(st.ops[0].expr, symbols, st.at, fwd);
            if (fwd) return 16;
            int64_t words = (target - (int64_t(st.addr) + 4)) / 4;
            return words >= -32768 && words <= 32767 ? 4 : 16;
        }
        if (m == ".word") return uint32_t(4 * st.raw_args.size());
        if (m == ".space") {
            int64_t n = eval(st.raw_args.at(0), symbols, st.at);
            if (n < 0 || n > 0x10000000) fail(st.at, ".space size out of range");
            return uint32_t(n);
        }
        if (m == ".ascii") return uint32_t(st.str_arg.size());
        if (m == ".asciiz") return uint32_t(st.str_arg.size() + 1);
        return 4;  // every real instruction and remaining pseudos
    }

    void pass1(const std::vector<SrcLine>& lines) {
        uint32_t lc = 0;
        bool lc_set = false;
        for (const auto& src : lines) {
            std::string text = src.text;
            // strip comments
            bool in_str = false, in_char = false;
            for (size_t i = 0; i < text.size(); i++) {
                char c = text[i];
                if (c == '"' && !in_char) in_str = !in_str;
                if (c == '\'' && !in_str) in_char = !in_char;
                if ((c == ';' || c == '#') && !in_str && !in_char) {
                    text.resize(i);
                    break;
                }
            }
            text = trim(text);
            if (text.empty()) continue;

            // label
            size_t colon = std::string::npos;
            {
                bool instr = false, inch = false;
                for (size_t i = 0; i < text.size(); i++) {
                    char c = text[i];
                    if (c == '"') instr = !instr;
                    if (c == '\'') inch = !inch;
                    if (c == ':' && !instr && !inch) {
                        colon = i;
                        break;
                    }
                    if (c == ' ' || c == '\t') break;
                }
            }
            if (colon != std::string::npos) {
                std::string label = trim(text.substr(0, colon));
                for (char c : label)
                    if (!is_sym_char(c)) fail(src, "bad label '" + label + "'");
                if (label.empty()) fail(src, "empty label");
                if (!lc_set) {
                    lc = 0x00010000;  // default origin
                    lc_set = true;
                }
                define(label, lc, src);  // duplicate label -> duplicate symbol error
                text = trim(text.substr(colon + 1));
                if (text.empty()) continue;
            }

            size_t sp = text.find_first_of(" \t");
            std::string mnem = text.substr(0, sp);
            std::string rest = sp == std::string::npos ? "" : trim(text.substr(sp));
            for (auto& c : mnem) c = char(std::tolower(uint8_t(c)));

            if (mnem == ".org") {
                int64_t v = eval(rest, symbols, src);
                if (v < 0 || v > 0xffffffffll || (v & 3)) fail(src, ".org must be a 4-aligned 32-bit address");
                lc = uint32_t(v);
                lc_set = true;
                continue;
            }
            if (mnem == ".equ") {
                auto args = split_args(rest);
                if (args.size() != 2) fail(src, ".equ expects 'name, expr'");
                define(args[0], eval(args[1], symbols, src), src);
                continue;
            }
            if (mnem == ".entry") {
                if (entry_set) fail(src, "duplicate .entry");
                entry_sym = trim(rest);
                entry_at = src;
                entry_set = true;
                continue;
            }
            if (mnem == ".align") {
                int64_t a = eval(rest, symbols, src);
                if (a <= 0 || (a & (a - 1))) fail(src, ".align expects a power of two");
                uint32_t aligned = uint32_t((lc + a - 1) & ~uint64_t(a - 1));
                if (aligned != lc) {
                    Stmt st{src, ".space", {}, {std::to_string(aligned - lc)}, "", lc, aligned - lc};
                    stmts.push_back(st);
                    lc = aligned;
                }
                continue;
            }

            if (!lc_set) {
                lc = 0x00010000;  // default origin
                lc_set = true;
            }

            Stmt st;
            st.at = src;
            st.mnem = mnem;
            if (mnem == ".ascii" || mnem == ".asciiz") {
                st.str_arg = decode_string_literal(trim(rest), src);
            } else if (mnem == ".word" || mnem == ".space") {
                st.raw_args = split_args(rest);
                if (st.raw_args.empty()) fail(src, mnem + " expects arguments");
            } else if (mnem[0] == '.') {
                fail(src, "unknown directive '" + mnem + "'");
            } else {
                for (auto& a : split_args(rest)) {
                    Operand op;
                    if (auto r = parse_reg(a)) {
                        op.is_reg = true;
                        op.reg = *r;
                    } else {
                        op.expr = a;
                    }
                    st.ops.push_back(op);
                }
            }
            st.addr = lc;
            st.size = stmt_size(st);
            if (uint64_t(lc) + st.size > (1ull << 32)) fail(src, "code runs past the 32-bit space");
            lc += st.size;
            stmts.push_back(std::move(st));
        }
    }

    void emit_bytes(uint32_t addr, const void* data, size_t n) {
        if (runs.empty() || addr != runs.back().first + runs.back().second.size())
            runs.push_back({addr, {}});
        auto& v = runs.back().second;
        const auto* p = static_cast<const uint8_t*>(data);
        v.insert(v.end(), p, p + n);
    }

    void emit_instr(uint32_t addr, const Instr& ins) {
        uint32_t w = encode(ins);
        emit_bytes(addr, &w, 4);
    }

    int64_t op_expr(const Stmt& st, size_t idx) {
        if (idx >= st.ops.size() || st.ops[idx].is_reg) fail(st.at, "expected an expression operand");
        return eval(st.ops[idx].expr, symbols, st.at);
    }
    uint8_t op_reg(const Stmt& st, size_t idx) {
        if (idx >= st.ops.size() || !st.ops[idx].is_reg) fail(st.at, "expected a register operand");
        return st.ops[idx].reg;
    }

    uint16_t check_imm16(const Stmt& st, Op op, int64_t v) {
        bool sext = op_imm_sign_extends(op);
        if (sext ? (v < -32768 || v > 32767) : (v < 0 || v > 0xffff))
            fail(st.at, "immediate " + std::to_string(v) + " does not fit in 16 bits");
        return uint16_t(v);
    }

    uint16_t rel_target(const Stmt& st, int64_t target) {
        int64_t delta = target - (int64_t(st.addr) + 4);
        if (delta & 3) fail(st.at, "branch target not 4-aligned");
        int64_t words = delta / 4;
        if (words < -32768 || words > 32767) fail(st.at, "branch target out of range");
        return uint16_t(int16_t(words));
    }

    // src2 operand: register or imm16
    void fill_src2(const Stmt& st, size_t idx, Op op, Instr& ins) {
        if (idx < st.ops.size() && st.ops[idx].is_reg) {
            ins.imm_form = false;
            ins.rs2 = st.ops[idx].reg;
        } else {
            ins.imm_form = true;
            ins.imm = check_imm16(st, op, op_expr(st, idx));
        }
    }

    void pass2() {
        for (const auto& st : stmts) {
            const std::string& m = st.mnem;
            if (m == ".word") {
                for (size_t i = 0; i < st.raw_args.size(); i++) {
                    int64_t v = eval(st.raw_args[i], symbols, st.at);
                    uint32_t w = uint32_t(v);
                    emit_bytes(st.addr + uint32_t(4 * i), &w, 4);
                }
                continue;
            }
            if (m == ".space") {
                std::vector<uint8_t> zeros(st.size, 0);
                if (st.size) emit_bytes(st.addr, zeros.data(), zeros.size());
                continue;
            }
            if (m == ".ascii" || m == ".asciiz") {
                std::string payload = st.str_arg;
                if (m == ".asciiz") payload += '\0';
                if (!payload.empty()) emit_bytes(st.addr, payload.data(), payload.size());
                continue;
            }

            // pseudos
            if (m == "li") {
                uint8_t rd = op_reg(st, 0);
                uint32_t v = uint32_t(eval(st.ops[1].expr, symbols, st.at));
                if (st.size == 4) {
                    emit_instr(st.addr, {Op::Loadi, true, rd, 0, 0, uint16_t(v)});
                } else if (st.size == 8) {
                    emit_instr(st.addr, {Op::Loadi, true, rd, 0, 0, uint16_t(v >> 16)});
                    emit_instr(st.addr + 4, {Op::Shl, true, rd, rd, 0, 16});
                } else {
                    emit_instr(st.addr, {Op::Loadi, true, rd, 0, 0, uint16_t(v >> 16)});
                    emit_instr(st.addr + 4, {Op::Shl, true, rd, rd, 0, 16});
                    emit_instr(st.addr + 8, {Op::Or, true, rd, rd, 0, uint16_t(v & 0xffff)});
                }
                continue;
            }
            if (m == "mov") {
                emit_instr(st.addr, {Op::Loadi, false, op_reg(st, 0), 0, op_reg(st, 1), 0});
                continue;
            }
            if (m == "nop") {
                emit_instr(st.addr, {Op::Loadi, false, 0, 0, 0, 0});
                continue;
            }
            if (m == "push") {
                emit_instr(st.addr, {Op::Sub, true, 7, 7, 0, 4});
                emit_instr(st.addr + 4, {Op::Store, true, op_reg(st, 0), 7, 0, 0});
                continue;
            }
            if (m == "pop") {
                emit_instr(st.addr, {Op::Load, true, op_reg(st, 0), 7, 0, 0});
                emit_instr(st.addr + 4, {Op::Add, true, 7, 7, 0, 4});
                continue;
            }
            if (m == "call") {
                uint32_t target = uint32_t(op_expr(st, 0));
                if (st.size == 4) {
                    emit_instr(st.addr, {Op::Jal, true, 5, 0, 0, rel_target(st, target)});
                } else {
                    emit_instr(st.addr, {Op::Loadi, true, 6, 0, 0, uint16_t(target >> 16)});
                    emit_instr(st.addr + 4, {Op::Shl, true, 6, 6, 0, 16});
                    emit_instr(st.addr + 8, {Op::Or, true, 6, 6, 0, uint16_t(target & 0xffff)});
                    emit_instr(st.addr + 12, {Op::Jal, false, 5, 6, 0, 0});
                }
                continue;
            }
            if (m == "callr") {
                emit_instr(st.addr, {Op::Jal, false, 5, op_reg(st, 0), 0, 0});
                continue;
            }
            if (m == "ret") {
                emit_instr(st.addr, {Op::Jmp, false, 0, 5, 0, 0});
                continue;
            }

            auto opc = op_from_name(m);
            if (!opc) fail(st.at, "unknown mnemonic '" + m + "'");
            Instr ins;
            ins.op = *opc;
            switch (*opc) {
                case Op::Halt:
                    if (st.ops.empty()) {
                        ins.imm_form = true;
                        ins.imm = 0;
                    } else {
                        fill_src2(st, 0, *opc, ins);
                    }
                    break;
                case Op::Sys:
                    if (!st.ops.empty()) fail(st.at, "sys takes no operands");
                    break;
                case Op::Loadi:
                    ins.rd = op_reg(st, 0);
                    fill_src2(st, 1, *opc, ins);
                    if (st.ops.size() != 2) fail(st.at, "loadi expects 2 operands");
                    break;
                case Op::Load:
                case Op::Store:
                    if (st.ops.size() != 3) fail(st.at, m + " expects 3 operands");
                    ins.rd = op_reg(st, 0);
                    ins.rs1 = op_reg(st, 1);
                    fill_src2(st, 2, *opc, ins);
                    break;
                case Op::Add:
                case Op::Sub:
                case Op::Mul:
                case Op::Divu:
                case Op::And:
                case Op::Or:
                case Op::Xor:
                case Op::Shl:
                case Op::Shr:
                    if (st.ops.size() != 3) fail(st.at, m + " expects 3 operands");
                    ins.rd = op_reg(st, 0);
                    ins.rs1 = op_reg(st, 1);
                    fill_src2(st, 2, *opc, ins);
                    break;
                case Op::Beq:
                case Op::Bne:
                case Op::Bltu:
                    if (st.ops.size() != 3) fail(st.at, m + " expects 3 operands");
                    ins.rd = op_reg(st, 0);
                    ins.rs1 = op_reg(st, 1);
                    ins.imm_form = true;
                    ins.imm = rel_target(st, op_expr(st, 2));
                    break;
                case Op::Jmp:
                    if (st.ops.size() != 1) fail(st.at, "jmp expects 1 operand");
                    if (st.ops[0].is_reg) {
                        ins.rs1 = st.ops[0].reg;
                    } else {
                        ins.imm_form = true;
                        ins.imm = rel_target(st, op_expr(st, 0));
                    }
                    break;
                case Op::Jal:
                    if (st.ops.size() != 2) fail(st.at, "jal expects 2 operands");
                    ins.rd = op_reg(st, 0);
                    if (st.ops[1].is_reg) {
                        ins.rs1 = st.ops[1].reg;
                    } else {
                        ins.imm_form = true;
                        ins.imm = rel_target(st, op_expr(st, 1));
                    }
                    break;
                default:
                    fail(st.at, "unknown mnemonic '" + m + "'");
            }
            emit_instr(st.addr, ins);
        }
    }

    GuestProgram finish(const std::string& top_file) {
        std::map<uint32_t, std::vector<uint8_t>> chunks;
        for (auto& [addr, bytes] : runs) {
            if (bytes.empty()) continue;
            if (!chunks.emplace(addr, std::move(bytes)).second)
                throw AsmError(top_file, 0, "overlapping sections at 0x" + hex64(addr).substr(8));
        }
        uint64_t prev_end = 0;
        bool first = true;
        for (const auto& [addr, bytes] : chunks) {
            if (!first && addr < prev_end)
                throw AsmError(top_file, 0, "overlapping sections at 0x" + hex64(addr).substr(8));
            prev_end = uint64_t(addr) + bytes.size();
            first = false;
        }

        GuestProgram prog;
        if (entry_set) {
            prog.entry = uint32_t(eval(entry_sym, symbols, entry_at));
        } else if (symbols.count("main")) {
            prog.entry = uint32_t(symbols["main"]);
        } else if (!chunks.empty()) {
            prog.entry = chunks.begin()->first;
        } else {
            throw AsmError(top_file, 0, "empty program");
        }

        bool placed = false;
        for (auto& [addr, bytes] : chunks) {
            if (!placed && prog.entry >= addr && prog.entry < addr + bytes.size()) {
                uint32_t split = prog.entry - addr;
                if (split)
                    prog.data.push_back({addr, {bytes.begin(), bytes.begin() + split}});
                prog.code.assign(bytes.begin() + split, bytes.end());
                placed = true;
            } else {
                prog.data.push_back({addr, bytes});
            }
        }
        if (!placed) throw AsmError(top_file, 0, "entry address is outside the emitted image");
        return prog;
    }
};

}  // namespace

GuestProgram assemble_string(const std::string& source, const std::string& name,
                             const std::string& include_dir) {
    std::vector<SrcLine> lines;
    gather_lines(source, name, include_dir, lines, 0);
    Assembler a;
    a.pass1(lines);
    a.pass2();
    return a.finish(name);
}

GuestProgram assemble_file(const std::string& path) {
    std::string text = read_file(path, nullptr);
    return assemble_string(text, path, fs::path(path).parent_path().string());
}

std::string disassemble(const std::vector<uint8_t>& code, uint32_t base_addr) {
    std::ostringstream out;
    char buf[96];
    std::snprintf(buf, sizeof buf, ".org 0x%x\n", base_addr);
    out << buf;
    for (size_t off = 0; off + 4 <= code.size(); off += 4) {
        uint32_t w = uint32_t(code[off]) | uint32_t(code[off + 1]) << 8 |
                     uint32_t(code[off + 2]) << 16 | uint32_t(code[off + 3]) << 24;
        Instr ins = decode(w);
        bool canonical = encode(ins) == w && ins.op != Op::Illegal;
        if (canonical && (ins.op == Op::Beq || ins.op == Op::Bne || ins.op == Op::Bltu) &&
            !ins.imm_form)
            canonical = false;
        if (!canonical) {
            std::snprintf(buf, sizeof buf, "    .word 0x%08x\n", w);
            out << buf;
            continue;
        }
        uint32_t addr = base_addr + uint32_t(off);
        std::string name(op_name(ins.op));
        auto imm_str = [&](bool sext) {
            return sext ? std::to_string(int16_t(ins.imm)) : std::to_string(ins.imm);
        };
        auto rel_str = [&] {
            uint32_t target = addr + 4 + uint32_t(int32_t(int16_t(ins.imm))) * 4;
            std::snprintf(buf, sizeof buf, "0x%x", target);
            return std::string(buf);
        };
        std::string text = "    " + name;
        auto r = [](unsigned i) { return "r" + std::to_string(i); };
        switch (ins.op) {
            case Op::Halt:
                text += " " + (ins.imm_form ? imm_str(false) : r(ins.rs2));
                break;
            case Op::Sys:
                break;
            case Op::Loadi:
                text += " " + r(ins.rd) + ", " + (ins.imm_form ? imm_str(false) : r(ins.rs2));
                break;
            case Op::Beq:
            case Op::Bne:
            case Op::Bltu:
                text += " " + r(ins.rd) + ", " + r(ins.rs1) + ", " + rel_str();
                break;
            case Op::Jmp:
                text += " " + (ins.imm_form ? rel_str() : r(ins.rs1));
                break;
            case Op::Jal:
                text += " " + r(ins.rd) + ", " + (ins.imm_form ? rel_str() : r(ins.rs1));
                break;
            default:
                text += " " + r(ins.rd) + ", " + r(ins.rs1) + ", " +
                        (ins.imm_form ? imm_str(op_imm_sign_extends(ins.op)) : r(ins.rs2));
        }
        out << text << "\n";
    }
    return out.str();
}

}  // namespace detcloud::vm
