#include <random>
#include <string>

#include <catch2/catch_amalgamated.hpp>

#include "avmas/md5.hpp"
#include "avmas/specimen.hpp"

using namespace avmas;

namespace {

constexpr const char* kMinimal =
    "specimen t1 payload 0 4\nPAYLOAD:ABCD\nreplicate %SYSROOT%/a.exe mutate none\n";

constexpr const char* kRandBytes2 =
    "specimen rb2 payload 0 8\nPAYLOAD:ABCDEFGH\nreplicate %SYSROOT%/rb.exe mutate randbytes 2\n";

constexpr const char* kXorKey =
    "specimen xor1 payload 0 6\nPAYLOAD:XORME!\nreplicate %SYSROOT%/xor-analog.exe mutate xorkey\n";

}  // namespace

TEST_CASE("parse minimal specimen", "[specimen]") {
    const SpecimenProgram program = parse_specimen(kMinimal);
    CHECK(program.name == "t1");
    CHECK(program.payload() == "ABCD");
    REQUIRE(program.instructions.size() == 1);
    const auto& op = std::get<ReplicateOp>(program.instructions[0].op);
    CHECK(op.path_template == "%SYSROOT%/a.exe");
    CHECK(op.strategy.kind == MutationStrategy::Kind::None);
    CHECK(program.specimen_id == digest_bytes(kMinimal));
}

TEST_CASE("parse is deterministic", "[specimen]") {
    const SpecimenProgram a = parse_specimen(kMinimal);
    const SpecimenProgram b = parse_specimen(kMinimal);
    CHECK(a == b);
    CHECK(a.specimen_id == b.specimen_id);
}

TEST_CASE("serialize round-trips through parse", "[specimen]") {
    const std::string source = "specimen rt payload 2 3\n"
                               "PAYLOAD:xxABCyy\n"
                               "# comment line\n"
                               "\n"
                               "write %SYSROOT%/f.txt some content  with spaces\n"
                               "repeat 2 {\n"
                               "regset HKLM\\K v\n"
                               "}\n"
                               "sleep 5\n";
    const SpecimenProgram program = parse_specimen(source);
    CHECK(serialize_specimen(program) == source);
    CHECK(parse_specimen(serialize_specimen(program)) == program);
    CHECK(program.payload() == "ABC");
    const auto& write_op = std::get<WriteFileOp>(program.instructions[0].op);
    CHECK(write_op.content == "some content  with spaces");
    const auto& repeat_op = std::get<RepeatOp>(program.instructions[1].op);
    CHECK(repeat_op.count == 2);
    REQUIRE(repeat_op.body.size() == 1);
    CHECK(std::get<RegSetOp>(repeat_op.body[0].op).value == "v");
}

TEST_CASE("parse errors carry position and expectation", "[specimen]") {
    SECTION("repeat count below 1") {
        CHECK_THROWS_MATCHES(
            parse_specimen("specimen t payload 0 1\nPAYLOAD:A\nrepeat 0 {\nsleep 1\n}\n"),
            SpecimenParseError,
            Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("repeat count")));
    }
    SECTION("header missing") {
        CHECK_THROWS_MATCHES(parse_specimen("sleep 1\n"), SpecimenParseError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("header")));
        CHECK_THROWS_AS(parse_specimen(""), SpecimenParseError);
    }
    SECTION("payload region out of bounds") {
        CHECK_THROWS_MATCHES(parse_specimen("specimen t payload 2 9\nPAYLOAD:ABCD\nsleep 1\n"),
                             SpecimenParseError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("payload region")));
    }
    SECTION("unknown instruction lists the expected keywords") {
        try {
            parse_specimen("specimen t payload 0 1\nPAYLOAD:A\nfrobnicate /x\n");
            FAIL("expected a parse error");
        } catch (const SpecimenParseError& err) {
            CHECK(err.line() == 3);
            CHECK(err.column() == 1);
            CHECK_FALSE(err.expected().empty());
        }
    }
    SECTION("unclosed repeat block") {
        CHECK_THROWS_MATCHES(
            parse_specimen("specimen t payload 0 1\nPAYLOAD:A\nrepeat 2 {\nsleep 1\n"),
            SpecimenParseError,
            Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("unclosed")));
    }
    SECTION("sleep beyond bound") {
        CHECK_THROWS_AS(parse_specimen("specimen t payload 0 1\nPAYLOAD:A\nsleep 3600001\n"),
                        SpecimenParseError);
    }
    SECTION("randbytes larger than payload") {
        CHECK_THROWS_AS(
            parse_specimen("specimen t payload 0 2\nPAYLOAD:AB\nreplicate /a.exe mutate randbytes 3\n"),
            SpecimenParseError);
    }
    SECTION("no instructions") {
        CHECK_THROWS_MATCHES(parse_specimen("specimen t payload 0 1\nPAYLOAD:A\n"),
                             SpecimenParseError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("no instructions")));
    }
}

TEST_CASE("validate flags bad templates and nesting", "[specimen]") {
    SECTION("well-formed program has no diagnostics") {
        CHECK(validate(parse_specimen(kMinimal)).empty());
    }

    SECTION("undeclared placeholder") {
        const SpecimenProgram program = parse_specimen(
            "specimen t payload 0 1\nPAYLOAD:A\nreplicate %BOGUS%/a.exe mutate none\n");
        const auto diagnostics = validate(program);
        REQUIRE(diagnostics.size() == 1);
        CHECK(diagnostics[0].severity == Diagnostic::Severity::Error);
        CHECK(diagnostics[0].line == 3);
        CHECK(diagnostics[0].message.find("%BOGUS%") != std::string::npos);
    }

    SECTION("relative template") {
        const SpecimenProgram program = parse_specimen(
            "specimen t payload 0 1\nPAYLOAD:A\nwrite %USER%/a.txt x\n");
        CHECK(validate(program).size() == 1);
    }

    SECTION("nesting depth 9 flagged on a constructed program") {
        SpecimenProgram program = parse_specimen(kMinimal);
        // Build repeat blocks nested 9 deep around a sleep.
        Instruction innermost{1, SleepOp{1}};
        Instruction current = innermost;
        for (int depth = 0; depth < 9; ++depth) {
            RepeatOp wrapper{1, {current}};
            current = Instruction{1, wrapper};
        }
        program.instructions = {current};
        const auto diagnostics = validate(program);
        REQUIRE(diagnostics.size() == 1);
        CHECK(diagnostics[0].message.find("nested deeper") != std::string::npos);
    }

    SECTION("nesting depth 8 accepted") {
        std::string source = "specimen t payload 0 1\nPAYLOAD:A\n";
        for (int i = 0; i < 8; ++i) {
            source += "repeat 1 {\n";
        }
        source += "sleep 1\n";
        for (int i = 0; i < 8; ++i) {
            source += "}\n";
        }
        CHECK(validate(parse_specimen(source)).empty());

        std::string nine = "specimen t payload 0 1\nPAYLOAD:A\n";
        for (int i = 0; i < 9; ++i) {
            nine += "repeat 1 {\n";
        }
        nine += "sleep 1\n";
        for (int i = 0; i < 9; ++i) {
            nine += "}\n";
        }
        CHECK_THROWS_AS(parse_specimen(nine), SpecimenParseError);
    }
}

TEST_CASE("render_offspring with strategy none is the identity", "[specimen]") {
    const SpecimenProgram program = parse_specimen(kMinimal);
    SplitMix64 rng(42);
    const std::string offspring = render_offspring(program, MutationStrategy{}, rng);
    CHECK(offspring == program.source_text);
    CHECK(digest_bytes(offspring) == program.specimen_id);
    CHECK(rng == SplitMix64(42));  // no draws
}

TEST_CASE("render_offspring randbytes golden digests", "[specimen]") {
    // Expected digests computed with an independent implementation of the
    // generator and hash before this module was built.
    const SpecimenProgram program = parse_specimen(kRandBytes2);
    CHECK(program.specimen_id.hex() == "bcb98e04d831814881105aab41985451");

    const MutationStrategy strategy{MutationStrategy::Kind::RandBytes, 2};
    SplitMix64 rng1(1);
    CHECK(digest_bytes(render_offspring(program, strategy, rng1)).hex() ==
          "e85de0f5ed8db750eecba862a8fd1b2b");
    SplitMix64 rng2(2);
    CHECK(digest_bytes(render_offspring(program, strategy, rng2)).hex() ==
          "e19b30c78d0f80dcc5b99e8cc9801c75");
}

TEST_CASE("render_offspring xorkey golden digests", "[specimen]") {
    const SpecimenProgram program = parse_specimen(kXorKey);
    CHECK(program.specimen_id.hex() == "7c95eaf7e2490075da41e4656cd47faa");

    const MutationStrategy strategy{MutationStrategy::Kind::XorKey, 0};
    SplitMix64 rng1(1);
    CHECK(digest_bytes(render_offspring(program, strategy, rng1)).hex() ==
          "48a073af9fa5a2b69fbe6a071fed3b18");
    SplitMix64 rng2(2);
    CHECK(digest_bytes(render_offspring(program, strategy, rng2)).hex() ==
          "644af78d626b338ed524a1b880a0d20b");
}

TEST_CASE("xorkey with a zero key still changes the digest", "[specimen]") {
    // Seed 6 is the smallest whose first draw has low byte 0x00.
    const SpecimenProgram program = parse_specimen(kXorKey);
    SplitMix64 rng(6);
    const std::string offspring =
        render_offspring(program, MutationStrategy{MutationStrategy::Kind::XorKey, 0}, rng);
    REQUIRE(offspring.size() == program.source_text.size() + 1);
    CHECK(offspring[program.payload_abs_offset] == '\0');  // prepended key byte
    // Payload bytes unchanged after the key byte.
    CHECK(offspring.substr(program.payload_abs_offset + 1, program.payload_length) ==
          std::string(program.payload()));
    CHECK(digest_bytes(offspring).hex() == "b92cb27b844beb05e37d42607d4b94e8");
    CHECK(digest_bytes(offspring) != program.specimen_id);
}

TEST_CASE("mutation locality: bytes outside the payload never change", "[specimen][property]") {
    std::mt19937_64 gen(7);
    for (int round = 0; round < 100; ++round) {
        // Payload sizes 1..24 at varying offsets within a larger data line.
        const std::size_t data_len = 1 + gen() % 32;
        const std::size_t payload_len = 1 + gen() % data_len;
        const std::size_t payload_off = gen() % (data_len - payload_len + 1);
        std::string data;
        for (std::size_t i = 0; i < data_len; ++i) {
            data += static_cast<char>('A' + gen() % 26);
        }
        const std::string source = "specimen m payload " + std::to_string(payload_off) + " " +
                                   std::to_string(payload_len) + "\nPAYLOAD:" + data +
                                   "\nsleep 1\n";
        const SpecimenProgram program = parse_specimen(source);

        MutationStrategy strategy;
        switch (gen() % 2) {
            case 0:
                strategy = MutationStrategy{MutationStrategy::Kind::RandBytes,
                                            static_cast<std::uint32_t>(1 + gen() % payload_len)};
                break;
            default:
                strategy = MutationStrategy{MutationStrategy::Kind::XorKey, 0};
                break;
        }
        SplitMix64 rng(gen());
        const std::string offspring = render_offspring(program, strategy, rng);

        const std::size_t inserted =
            strategy.kind == MutationStrategy::Kind::XorKey ? 1 : 0;
        REQUIRE(offspring.size() == source.size() + inserted);
        CAPTURE(round, source, static_cast<int>(strategy.kind));
        // Prefix before the payload region and suffix after it are identical.
        CHECK(offspring.substr(0, program.payload_abs_offset) ==
              source.substr(0, program.payload_abs_offset));
        CHECK(offspring.substr(program.payload_abs_offset + program.payload_length + inserted) ==
              source.substr(program.payload_abs_offset + program.payload_length));
    }
}

TEST_CASE("render_offspring strategy mismatch is a validation error", "[specimen]") {
    const SpecimenProgram program = parse_specimen(kMinimal);  // payload length 4
    SplitMix64 rng(1);
    CHECK_THROWS_AS(
        render_offspring(program, MutationStrategy{MutationStrategy::Kind::RandBytes, 5}, rng),
        ValidationError);
    CHECK_THROWS_AS(
        render_offspring(program, MutationStrategy{MutationStrategy::Kind::RandBytes, 0}, rng),
        ValidationError);
}
