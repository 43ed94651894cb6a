#pragma once

// The specimen DSL: a line-oriented program describing replication, mutation,
// file, registry, and process behavior. The full source text doubles as the
// byte sequence being fingerprinted, so serialization is the identity.
//
// Grammar:
//   specimen <name> payload <offset> <len>      header, line 1
//   PAYLOAD:<raw bytes to end of line>          line 2; offset/len are
//                                               relative to these bytes
//   replicate <template> mutate none
//   replicate <template> mutate randbytes <k>
//   replicate <template> mutate xorkey
//   write <template> <raw bytes to end of line>
//   delete <template>
//   regset <key> <raw value to end of line>
//   regdel <key>
//   spawn <name>
//   exitproc <ordinal>|last
//   sleep <millis>
//   repeat <count> {
//   }
// Blank lines and lines whose first token starts with '#' are ignored after
// line 2. Path templates may use %SYSROOT%, %USER%, %HOST%.

#include <charconv>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "avmas/env.hpp"
#include "avmas/errors.hpp"
#include "avmas/md5.hpp"
#include "avmas/prng.hpp"

namespace avmas {

inline constexpr std::uint32_t kRepeatCountMax = 10000;
inline constexpr std::uint64_t kSleepMillisMax = 3'600'000;
inline constexpr std::size_t kRepeatDepthMax = 8;

struct MutationStrategy {
    enum class Kind { None, RandBytes, XorKey };
    Kind kind = Kind::None;
    std::uint32_t rand_count = 0;  // RandBytes only

    friend bool operator==(const MutationStrategy&, const MutationStrategy&) = default;
};

struct Instruction;

struct ReplicateOp {
    std::string path_template;
    MutationStrategy strategy;
    friend bool operator==(const ReplicateOp&, const ReplicateOp&) = default;
};
struct WriteFileOp {
    std::string path_template;
    std::string content;
    friend bool operator==(const WriteFileOp&, const WriteFileOp&) = default;
};
struct DeleteFileOp {
    std::string path_template;
    friend bool operator==(const DeleteFileOp&, const DeleteFileOp&) = default;
};
struct RegSetOp {
    std::string key;
    std::string value;
    friend bool operator==(const RegSetOp&, const RegSetOp&) = default;
};
struct RegDeleteOp {
    std::string key;
    friend bool operator==(const RegDeleteOp&, const RegDeleteOp&) = default;
};
struct SpawnOp {
    std::string name;
    friend bool operator==(const SpawnOp&, const SpawnOp&) = default;
};
struct ExitProcOp {
    bool last = false;          // exit the most recently spawned process
    std::uint32_t ordinal = 0;  // 1-based spawn order, when !last
    friend bool operator==(const ExitProcOp&, const ExitProcOp&) = default;
};
struct SleepOp {
    std::uint64_t millis = 0;
    friend bool operator==(const SleepOp&, const SleepOp&) = default;
};
struct RepeatOp {
    std::uint32_t count = 1;
    std::vector<Instruction> body;
    friend bool operator==(const RepeatOp&, const RepeatOp&);
};

struct Instruction {
    std::size_t line = 0;  // 1-based source line
    std::variant<ReplicateOp, WriteFileOp, DeleteFileOp, RegSetOp, RegDeleteOp, SpawnOp,
                 ExitProcOp, SleepOp, RepeatOp>
        op;
    friend bool operator==(const Instruction&, const Instruction&) = default;
};

inline bool operator==(const RepeatOp& a, const RepeatOp& b) {
    return a.count == b.count && a.body == b.body;
}

struct SpecimenProgram {
    std::string source_text;
    std::string name;
    std::uint64_t payload_offset = 0;    // declared, relative to the payload data bytes
    std::uint64_t payload_length = 0;
    std::size_t payload_abs_offset = 0;  // resolved offset into source_text
    std::vector<Instruction> instructions;
    Digest specimen_id;                  // MD5 of source_text

    std::string_view payload() const {
        return std::string_view(source_text).substr(payload_abs_offset, payload_length);
    }

    friend bool operator==(const SpecimenProgram&, const SpecimenProgram&) = default;
};

struct Diagnostic {
    enum class Severity { Error, Warning };
    Severity severity = Severity::Error;
    std::size_t line = 0;
    std::size_t column = 0;
    std::string message;

    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

namespace detail {

struct Token {
    std::string_view text;
    std::size_t column = 0;  // 1-based
};

inline std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        if (line[i] == ' ' || line[i] == '\t') {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') {
            ++i;
        }
        tokens.push_back(Token{line.substr(start, i - start), start + 1});
    }
    return tokens;
}

inline std::uint64_t parse_uint(const Token& token, std::size_t line_no, const std::string& what,
                                std::uint64_t max_value) {
    std::uint64_t value = 0;
    const char* begin = token.text.data();
    const char* end = begin + token.text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw SpecimenParseError(line_no, token.column, what + " must be an unsigned integer");
    }
    if (value > max_value) {
        throw SpecimenParseError(line_no, token.column,
                                 what + " exceeds maximum " + std::to_string(max_value));
    }
    return value;
}

/// The raw tail of `line` after `arg`: one separator character, then
/// everything to end of line (may be empty).
inline std::string raw_tail(std::string_view line, const Token& arg) {
    const std::size_t arg_end = (arg.column - 1) + arg.text.size();
    if (arg_end >= line.size()) {
        return "";
    }
    return std::string(line.substr(arg_end + 1));
}

inline void require_token_count(const std::vector<Token>& tokens, std::size_t expected,
                                std::size_t line_no, const std::string& form) {
    if (tokens.size() < expected) {
        throw SpecimenParseError(line_no, tokens.back().column + tokens.back().text.size(),
                                 "incomplete instruction; usage: " + form);
    }
    if (tokens.size() > expected) {
        throw SpecimenParseError(line_no, tokens[expected].column,
                                 "unexpected trailing token; usage: " + form);
    }
}

inline const std::vector<std::string>& instruction_keywords() {
    static const std::vector<std::string> kKeywords = {
        "replicate", "write", "delete", "regset", "regdel",
        "spawn",     "exitproc", "sleep", "repeat", "}"};
    return kKeywords;
}

}  // namespace detail

inline SpecimenProgram parse_specimen(std::string_view source) {
    using detail::Token;

    SpecimenProgram program;
    program.source_text = std::string(source);

    // Split into lines, keeping byte offsets; '\n' is the only terminator.
    std::vector<std::pair<std::string_view, std::size_t>> lines;
    {
        std::size_t pos = 0;
        while (pos < source.size()) {
            const auto nl = source.find('\n', pos);
            if (nl == std::string_view::npos) {
                lines.emplace_back(source.substr(pos), pos);
                break;
            }
            lines.emplace_back(source.substr(pos, nl - pos), pos);
            pos = nl + 1;
        }
    }

    if (lines.empty()) {
        throw SpecimenParseError(1, 1, "header missing", {"specimen"});
    }

    // Header: specimen <name> payload <offset> <len>
    const auto header = detail::tokenize(lines[0].first);
    if (header.empty() || header[0].text != "specimen") {
        throw SpecimenParseError(1, header.empty() ? 1 : header[0].column, "header missing",
                                 {"specimen"});
    }
    if (header.size() != 5 || header[2].text != "payload") {
        throw SpecimenParseError(1, header.size() > 2 ? header[2].column : 1,
                                 "malformed header; usage: specimen <name> payload <offset> <len>",
                                 {"payload"});
    }
    program.name = std::string(header[1].text);
    program.payload_offset = detail::parse_uint(header[3], 1, "payload offset", 1'000'000'000);
    program.payload_length = detail::parse_uint(header[4], 1, "payload length", 1'000'000'000);

    // Payload line: PAYLOAD:<raw bytes>
    static constexpr std::string_view kPayloadMarker = "PAYLOAD:";
    if (lines.size() < 2 || !lines[1].first.starts_with(kPayloadMarker)) {
        throw SpecimenParseError(2, 1, "payload line missing", {std::string(kPayloadMarker)});
    }
    const std::size_t data_len = lines[1].first.size() - kPayloadMarker.size();
    if (program.payload_offset + program.payload_length > data_len) {
        throw SpecimenParseError(1, header[3].column, "payload region out of bounds");
    }
    program.payload_abs_offset =
        lines[1].second + kPayloadMarker.size() + static_cast<std::size_t>(program.payload_offset);

    // Instruction lines.
    std::vector<std::vector<Instruction>*> block_stack;
    std::vector<std::size_t> open_repeat_lines;
    std::vector<Instruction>* current = &program.instructions;

    for (std::size_t li = 2; li < lines.size(); ++li) {
        const std::size_t line_no = li + 1;
        const std::string_view text = lines[li].first;
        const auto tokens = detail::tokenize(text);
        if (tokens.empty() || tokens[0].text.front() == '#') {
            continue;
        }
        const std::string_view keyword = tokens[0].text;

        if (keyword == "}") {
            detail::require_token_count(tokens, 1, line_no, "}");
            if (block_stack.empty()) {
                throw SpecimenParseError(line_no, tokens[0].column, "unmatched '}'");
            }
            current = block_stack.back();
            block_stack.pop_back();
            open_repeat_lines.pop_back();
            continue;
        }

        if (keyword == "replicate") {
            if (tokens.size() < 4 || tokens[2].text != "mutate") {
                throw SpecimenParseError(line_no, tokens.size() > 2 ? tokens[2].column : 1,
                                         "usage: replicate <template> mutate <strategy>",
                                         {"mutate"});
            }
            MutationStrategy strategy;
            const std::string_view kind = tokens[3].text;
            if (kind == "none") {
                strategy.kind = MutationStrategy::Kind::None;
                detail::require_token_count(tokens, 4, line_no, "replicate <template> mutate none");
            } else if (kind == "xorkey") {
                strategy.kind = MutationStrategy::Kind::XorKey;
                detail::require_token_count(tokens, 4, line_no,
                                            "replicate <template> mutate xorkey");
            } else if (kind == "randbytes") {
                strategy.kind = MutationStrategy::Kind::RandBytes;
                detail::require_token_count(tokens, 5, line_no,
                                            "replicate <template> mutate randbytes <k>");
                const std::uint64_t k =
                    detail::parse_uint(tokens[4], line_no, "randbytes count", 1'000'000'000);
                if (k < 1) {
                    throw SpecimenParseError(line_no, tokens[4].column,
                                             "randbytes count must be >= 1");
                }
                if (k > program.payload_length) {
                    throw SpecimenParseError(line_no, tokens[4].column,
                                             "randbytes count exceeds payload length");
                }
                strategy.rand_count = static_cast<std::uint32_t>(k);
            } else {
                throw SpecimenParseError(line_no, tokens[3].column, "unknown mutation strategy",
                                         {"none", "randbytes", "xorkey"});
            }
            current->push_back(
                Instruction{line_no, ReplicateOp{std::string(tokens[1].text), strategy}});
        } else if (keyword == "write") {
            if (tokens.size() < 2) {
                throw SpecimenParseError(line_no, tokens[0].column + tokens[0].text.size(),
                                         "usage: write <template> <content>");
            }
            current->push_back(Instruction{
                line_no, WriteFileOp{std::string(tokens[1].text), detail::raw_tail(text, tokens[1])}});
        } else if (keyword == "delete") {
            detail::require_token_count(tokens, 2, line_no, "delete <template>");
            current->push_back(Instruction{line_no, DeleteFileOp{std::string(tokens[1].text)}});
        } else if (keyword == "regset") {
            if (tokens.size() < 2) {
                throw SpecimenParseError(line_no, tokens[0].column + tokens[0].text.size(),
                                         "usage: regset <key> <value>");
            }
            current->push_back(Instruction{
                line_no, RegSetOp{std::string(tokens[1].text), detail::raw_tail(text, tokens[1])}});
        } else if (keyword == "regdel") {
            detail::require_token_count(tokens, 2, line_no, "regdel <key>");
            current->push_back(Instruction{line_no, RegDeleteOp{std::string(tokens[1].text)}});
        } else if (keyword == "spawn") {
            detail::require_token_count(tokens, 2, line_no, "spawn <name>");
            current->push_back(Instruction{line_no, SpawnOp{std::string(tokens[1].text)}});
        } else if (keyword == "exitproc") {
            detail::require_token_count(tokens, 2, line_no, "exitproc <ordinal>|last");
            ExitProcOp op;
            if (tokens[1].text == "last") {
                op.last = true;
            } else {
                const std::uint64_t ordinal =
                    detail::parse_uint(tokens[1], line_no, "process ordinal", 1'000'000'000);
                if (ordinal < 1) {
                    throw SpecimenParseError(line_no, tokens[1].column,
                                             "process ordinal must be >= 1");
                }
                op.ordinal = static_cast<std::uint32_t>(ordinal);
            }
            current->push_back(Instruction{line_no, op});
        } else if (keyword == "sleep") {
            detail::require_token_count(tokens, 2, line_no, "sleep <millis>");
            const std::uint64_t millis =
                detail::parse_uint(tokens[1], line_no, "sleep duration", kSleepMillisMax);
            current->push_back(Instruction{line_no, SleepOp{millis}});
        } else if (keyword == "repeat") {
            detail::require_token_count(tokens, 3, line_no, "repeat <count> {");
            if (tokens[2].text != "{") {
                throw SpecimenParseError(line_no, tokens[2].column, "expected '{'", {"{"});
            }
            const std::uint64_t count =
                detail::parse_uint(tokens[1], line_no, "repeat count", kRepeatCountMax);
            if (count < 1) {
                throw SpecimenParseError(line_no, tokens[1].column, "repeat count must be >= 1");
            }
            if (block_stack.size() >= kRepeatDepthMax) {
                throw SpecimenParseError(line_no, tokens[0].column,
                                         "repeat blocks nested deeper than " +
                                             std::to_string(kRepeatDepthMax));
            }
            current->push_back(
                Instruction{line_no, RepeatOp{static_cast<std::uint32_t>(count), {}}});
            block_stack.push_back(current);
            open_repeat_lines.push_back(line_no);
            current = &std::get<RepeatOp>(current->back().op).body;
        } else {
            throw SpecimenParseError(line_no, tokens[0].column,
                                     "unknown instruction \"" + std::string(keyword) + "\"",
                                     detail::instruction_keywords());
        }
    }

    if (!block_stack.empty()) {
        throw SpecimenParseError(open_repeat_lines.back(), 1, "unclosed repeat block", {"}"});
    }
    if (program.instructions.empty()) {
        throw SpecimenParseError(lines.size(), 1, "program has no instructions",
                                 detail::instruction_keywords());
    }

    program.specimen_id = digest_bytes(program.source_text);
    return program;
}

/// The inverse of parse for fingerprinting purposes: the source text is the
/// program.
inline std::string serialize_specimen(const SpecimenProgram& program) {
    return program.source_text;
}

namespace detail {

inline void check_template(const std::string& path_template, std::size_t line,
                           std::vector<Diagnostic>& out) {
    // Expanding against a fixed dummy profile checks placeholder validity and
    // that the result is an absolute, normalized virtual path.
    static const EnvProfile kDummy{"dummy", "h", "u", "/s", 0, 0};
    std::string expanded;
    try {
        expanded = expand_path(kDummy, path_template);
    } catch (const ValidationError& err) {
        out.push_back(Diagnostic{Diagnostic::Severity::Error, line, 1, err.what()});
        return;
    }
    if (!is_normalized_absolute(expanded)) {
        out.push_back(Diagnostic{Diagnostic::Severity::Error, line, 1,
                                 "template \"" + path_template +
                                     "\" does not expand to a normalized absolute path"});
    }
}

inline void validate_block(const std::vector<Instruction>& block, const SpecimenProgram& program,
                           std::size_t depth, std::vector<Diagnostic>& out) {
    for (const Instruction& instruction : block) {
        const std::size_t line = instruction.line;
        if (const auto* op = std::get_if<ReplicateOp>(&instruction.op)) {
            check_template(op->path_template, line, out);
            if (op->strategy.kind == MutationStrategy::Kind::RandBytes) {
                if (op->strategy.rand_count < 1) {
                    out.push_back(Diagnostic{Diagnostic::Severity::Error, line, 1,
                                             "randbytes count must be >= 1"});
                } else if (op->strategy.rand_count > program.payload_length) {
                    out.push_back(Diagnostic{Diagnostic::Severity::Error, line, 1,
                                             "randbytes count exceeds payload length"});
                }
            }
        } else if (const auto* op = std::get_if<WriteFileOp>(&instruction.op)) {
            check_template(op->path_template, line, out);
        } else if (const auto* op = std::get_if<DeleteFileOp>(&instruction.op)) {
            check_template(op->path_template, line, out);
        } else if (const auto* op = std::get_if<RegSetOp>(&instruction.op)) {
            if (op->key.empty()) {
                out.push_back(Diagnostic{Diagnostic::Severity::Error, line, 1,
                                         "registry key must be non-empty"});
            }
        } else if (const auto* op = std::get_if<RegDeleteOp>(&instruction.op)) {
            if (op->key.empty()) {
                out.push_back(Diagnostic{Diagnostic::Severity::Error, line, 1,
                                         "registry key must be non-empty"});
            }
        } else if (const auto* op = std::get_if<SleepOp>(&instruction.op)) {
            if (op->millis > kSleepMillisMax) {
                out.push_back(Diagnostic{Diagnostic::Severity::Error, line, 1,
                                         "sleep duration exceeds " +
                                             std::to_string(kSleepMillisMax) + " ms"});
            }
        } else if (const auto* op = std::get_if<ExitProcOp>(&instruction.op)) {
            if (!op->last && op->ordinal < 1) {
                out.push_back(Diagnostic{Diagnostic::Severity::Error, line, 1,
                                         "process ordinal must be >= 1"});
            }
        } else if (const auto* op = std::get_if<RepeatOp>(&instruction.op)) {
            if (depth + 1 > kRepeatDepthMax) {
                out.push_back(Diagnostic{Diagnostic::Severity::Error, line, 1,
                                         "repeat blocks nested deeper than " +
                                             std::to_string(kRepeatDepthMax)});
            } else {
                if (op->count < 1 || op->count > kRepeatCountMax) {
                    out.push_back(Diagnostic{Diagnostic::Severity::Error, line, 1,
                                             "repeat count must be in [1, " +
                                                 std::to_string(kRepeatCountMax) + "]"});
                }
                validate_block(op->body, program, depth + 1, out);
            }
        }
    }
}

}  // namespace detail

/// Empty result iff the program satisfies every invariant and all path
/// templates use only declared placeholders.
inline std::vector<Diagnostic> validate(const SpecimenProgram& program) {
    std::vector<Diagnostic> diagnostics;
    if (program.instructions.empty()) {
        diagnostics.push_back(
            Diagnostic{Diagnostic::Severity::Error, 1, 1, "program has no instructions"});
    }
    if (program.payload_abs_offset + program.payload_length > program.source_text.size()) {
        diagnostics.push_back(
            Diagnostic{Diagnostic::Severity::Error, 1, 1, "payload region out of bounds"});
    }
    detail::validate_block(program.instructions, program, 0, diagnostics);
    return diagnostics;
}

/// Produces the offspring byte sequence for one replication. PRNG draws come
/// from the owning environment's stream so the same polymorphic specimen
/// yields different offspring under different profiles, deterministically.
///
/// Draw order is pinned: RandBytes makes k position draws (Fisher-Yates
/// prefix, j = i + next() % (n - i)) followed by k byte draws; XorKey makes a
/// single byte draw.
inline std::string render_offspring(const SpecimenProgram& program,
                                    const MutationStrategy& strategy, SplitMix64& rng) {
    const std::size_t abs_offset = program.payload_abs_offset;
    const std::size_t n = static_cast<std::size_t>(program.payload_length);
    if (abs_offset + n > program.source_text.size()) {
        throw ValidationError("payload", "payload region out of bounds");
    }

    switch (strategy.kind) {
        case MutationStrategy::Kind::None:
            return program.source_text;

        case MutationStrategy::Kind::RandBytes: {
            const std::size_t k = strategy.rand_count;
            if (k < 1) {
                throw ValidationError("strategy", "randbytes count must be >= 1");
            }
            if (k > n) {
                throw ValidationError("strategy", "randbytes count exceeds payload length");
            }
            std::string out = program.source_text;
            std::vector<std::size_t> pool(n);
            std::iota(pool.begin(), pool.end(), std::size_t{0});
            for (std::size_t i = 0; i < k; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(rng.next() % (n - i));
                std::swap(pool[i], pool[j]);
            }
            for (std::size_t i = 0; i < k; ++i) {
                out[abs_offset + pool[i]] = static_cast<char>(rng.next_byte());
            }
            return out;
        }

        case MutationStrategy::Kind::XorKey: {
            const std::uint8_t key = rng.next_byte();
            std::string out;
            out.reserve(program.source_text.size() + 1);
            out.append(program.source_text, 0, abs_offset);
            out.push_back(static_cast<char>(key));
            for (std::size_t i = 0; i < n; ++i) {
                out.push_back(static_cast<char>(
                    static_cast<std::uint8_t>(program.source_text[abs_offset + i]) ^ key));
            }
            out.append(program.source_text, abs_offset + n, std::string::npos);
            return out;
        }
    }
    throw ValidationError("strategy", "unknown mutation strategy");
}

}  // namespace avmas
