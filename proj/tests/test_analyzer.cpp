#include <random>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "avmas/analyzer.hpp"
#include "avmas/monitor.hpp"

using namespace avmas;

namespace {

EnvProfile profile_with(std::string env_id, std::uint64_t seed) {
    EnvProfile profile;
    profile.env_id = std::move(env_id);
    profile.hostname = "host" + std::to_string(seed);
    profile.username = "user" + std::to_string(seed);
    profile.sysroot = "/s";
    profile.rng_seed = seed;
    return profile;
}

const std::string kSpecimenId = "00112233445566778899aabbccddeeff";

MonitorReport raw_report(std::string env_id, std::vector<OffspringRecord> offspring,
                         std::vector<BehaviorEvent> events) {
    MonitorReport report;
    report.specimen_id = kSpecimenId;
    report.env_profile = profile_with(std::move(env_id), 1);
    report.events = std::move(events);
    report.offspring = std::move(offspring);
    return report;
}

OffspringRecord offspring_at(const std::string& canonical, const std::string& expanded,
                             const std::string& md5, std::uint64_t size = 10) {
    return OffspringRecord{canonical, expanded, size, md5, 1};
}

const std::string kMd5A = "aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa";
const std::string kMd5B = "bbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbb";

}  // namespace

TEST_CASE("canonical activity sets match across differing profiles", "[analyzer]") {
    const SpecimenProgram program = parse_specimen(
        "specimen act payload 0 2\nPAYLOAD:OK\n"
        "write %SYSROOT%/u/%USER%/x.exe body\n"
        "regset HKLM\\Run\\k v\n"
        "spawn child\n"
        "exitproc 1\n"
        "delete %SYSROOT%/nothing.txt\n");
    const MonitorReport a = execute_and_monitor(program, profile_with("A", 1));
    const MonitorReport b = execute_and_monitor(program, profile_with("B", 2));

    const ActivityMultiset set_a = canonical_activity_set(a);
    const ActivityMultiset set_b = canonical_activity_set(b);
    CHECK(set_a == set_b);

    // The %USER%-dependent write canonicalizes to the same descriptor in both.
    bool found = false;
    for (const auto& [descriptor, count] : set_a) {
        if (descriptor.kind == "FileCreate" &&
            descriptor.detail.find("path=%SYSROOT%/u/%USER%/x.exe") != std::string::npos) {
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("canonical activity is a multiset over descriptors, order-free", "[analyzer]") {
    BehaviorEvent e1{0, 1, EventKind::RegSet, jsonu::json{{"key", "K"}, {"value", "v"}}};
    BehaviorEvent e2{1, 2, EventKind::ProcSpawn, jsonu::json{{"name", "n"}, {"pid", 2}}};
    BehaviorEvent e2_renumbered{0, 5, EventKind::ProcSpawn, jsonu::json{{"name", "n"}, {"pid", 2}}};
    BehaviorEvent e1_renumbered{1, 9, EventKind::RegSet, jsonu::json{{"key", "K"}, {"value", "v"}}};

    const MonitorReport forward = raw_report("A", {}, {e1, e2});
    const MonitorReport reversed = raw_report("A", {}, {e2_renumbered, e1_renumbered});
    CHECK(canonical_activity_set(forward) == canonical_activity_set(reversed));

    // Repetition counts matter.
    const MonitorReport twice = raw_report("A", {}, {e1, e1_renumbered});
    CHECK(canonical_activity_set(twice) != canonical_activity_set(forward));
}

TEST_CASE("pids canonicalize to spawn-order ordinals", "[analyzer]") {
    // Same logical behavior, different pid numbering.
    BehaviorEvent spawn_a{0, 1, EventKind::ProcSpawn, jsonu::json{{"name", "w"}, {"pid", 2}}};
    BehaviorEvent exit_a{1, 2, EventKind::ProcExit, jsonu::json{{"pid", 2}}};
    BehaviorEvent spawn_b{0, 1, EventKind::ProcSpawn, jsonu::json{{"name", "w"}, {"pid", 7}}};
    BehaviorEvent exit_b{1, 2, EventKind::ProcExit, jsonu::json{{"pid", 7}}};

    const auto set_a = canonical_activity_set(raw_report("A", {}, {spawn_a, exit_a}));
    const auto set_b = canonical_activity_set(raw_report("B", {}, {spawn_b, exit_b}));
    CHECK(set_a == set_b);
    CHECK(set_a.contains(ActivityDescriptor{"ProcExit", "pid=p1"}));
}

TEST_CASE("pair_offspring groups by canonical path", "[analyzer]") {
    SECTION("present in all reports is Matched") {
        const auto a = raw_report("A", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A)}, {});
        const auto b = raw_report("B", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5B)}, {});
        const std::vector<MonitorReport> reports{a, b};
        const auto matches = pair_offspring(reports);
        REQUIRE(matches.size() == 1);
        CHECK(matches[0].status == OffspringMatch::Status::Matched);
        REQUIRE(matches[0].entries.size() == 2);
        CHECK(matches[0].has_divergent_digests());
    }

    SECTION("absent from one report is Missing") {
        const auto a = raw_report("A", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A)}, {});
        const auto b = raw_report("B", {}, {});
        const std::vector<MonitorReport> reports{a, b};
        const auto matches = pair_offspring(reports);
        REQUIRE(matches.size() == 1);
        CHECK(matches[0].status == OffspringMatch::Status::Missing);
        CHECK(matches[0].entries.size() == 1);
    }

    SECTION("no offspring anywhere yields an empty list") {
        const std::vector<MonitorReport> reports{raw_report("A", {}, {}), raw_report("B", {}, {})};
        CHECK(pair_offspring(reports).empty());
    }

    SECTION("output ordered by canonical path") {
        const auto a = raw_report("A",
                                  {offspring_at("%SYSROOT%/z.exe", "/s/z.exe", kMd5A),
                                   offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A)},
                                  {});
        const auto b = raw_report("B",
                                  {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A),
                                   offspring_at("%SYSROOT%/z.exe", "/s/z.exe", kMd5A)},
                                  {});
        const std::vector<MonitorReport> reports{a, b};
        const auto matches = pair_offspring(reports);
        REQUIRE(matches.size() == 2);
        CHECK(matches[0].canonical_path == "%SYSROOT%/a.exe");
        CHECK(matches[1].canonical_path == "%SYSROOT%/z.exe");
    }
}

TEST_CASE("pair_offspring preconditions", "[analyzer]") {
    auto a = raw_report("A", {}, {});
    auto b = raw_report("B", {}, {});

    SECTION("fewer than two reports") {
        const std::vector<MonitorReport> one{a};
        CHECK_THROWS_AS(pair_offspring(one), PreconditionError);
    }

    SECTION("specimen mismatch") {
        b.specimen_id = "ffffffffffffffffffffffffffffffff";
        const std::vector<MonitorReport> reports{a, b};
        CHECK_THROWS_MATCHES(pair_offspring(reports), PreconditionError,
                             Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(
                                 "not for the same specimen")));
    }

    SECTION("window mismatch") {
        b.config.window_seconds = 240;
        const std::vector<MonitorReport> reports{a, b};
        CHECK_THROWS_AS(pair_offspring(reports), PreconditionError);
    }
}

TEST_CASE("classify: equal digests and equal activity is Traditional", "[analyzer]") {
    const auto a = raw_report("A", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A)}, {});
    const auto b = raw_report("B", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A)}, {});
    const std::vector<MonitorReport> reports{a, b};
    const Verdict verdict = classify(reports);
    CHECK(verdict.classification == Classification::Traditional);
    CHECK(verdict.offspring_divergences.empty());
    CHECK(verdict.activity_deltas.empty());
    CHECK(verdict.report_ids == std::vector<std::string>{"A", "B"});
}

TEST_CASE("classify: diverging digests are Polymorphic", "[analyzer]") {
    const auto a = raw_report("A", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A)}, {});
    const auto b = raw_report("B", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5B)}, {});
    const std::vector<MonitorReport> reports{a, b};
    const Verdict verdict = classify(reports);
    CHECK(verdict.classification == Classification::Polymorphic);
    REQUIRE(verdict.offspring_divergences.size() == 1);
    CHECK(verdict.offspring_divergences[0].canonical_path == "%SYSROOT%/a.exe");
}

TEST_CASE("classify: missing offspring is Polymorphic evidence", "[analyzer]") {
    const auto a = raw_report(
        "A", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A)},
        {BehaviorEvent{0, 1, EventKind::FileCreate,
                       jsonu::json{{"path", "/s/a.exe"}, {"md5", kMd5A}, {"size_bytes", 10}}}});
    const auto b = raw_report("B", {}, {});
    const std::vector<MonitorReport> reports{a, b};
    const Verdict verdict = classify(reports);
    CHECK(verdict.classification == Classification::Polymorphic);
    REQUIRE_FALSE(verdict.offspring_divergences.empty());
    CHECK(verdict.offspring_divergences[0].status == OffspringMatch::Status::Missing);
    CHECK_FALSE(verdict.activity_deltas.empty());  // the FileCreate only A performed
}

TEST_CASE("classify: activity difference alone is Polymorphic", "[analyzer]") {
    // Same offspring and digests, but B sets an extra registry key.
    const auto shared = offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A);
    const auto a = raw_report("A", {shared}, {});
    const auto b = raw_report(
        "B", {shared},
        {BehaviorEvent{0, 1, EventKind::RegSet, jsonu::json{{"key", "K"}, {"value", "v"}}}});
    const std::vector<MonitorReport> reports{a, b};
    const Verdict verdict = classify(reports);
    CHECK(verdict.classification == Classification::Polymorphic);
    CHECK(verdict.offspring_divergences.empty());
    REQUIRE(verdict.activity_deltas.size() == 1);
    CHECK(verdict.activity_deltas[0].kind == "RegSet");
    CHECK(verdict.activity_deltas[0].counts_by_env.at("A") == 0);
    CHECK(verdict.activity_deltas[0].counts_by_env.at("B") == 1);
}

TEST_CASE("classify: inert specimens are NonReplicating", "[analyzer]") {
    const std::vector<MonitorReport> reports{raw_report("A", {}, {}), raw_report("B", {}, {})};
    const Verdict verdict = classify(reports);
    CHECK(verdict.classification == Classification::NonReplicating);
    CHECK(verdict.offspring_divergences.empty());
    CHECK(verdict.activity_deltas.empty());
}

TEST_CASE("classify is symmetric in its inputs", "[analyzer]") {
    const auto a = raw_report("A", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A)}, {});
    const auto b = raw_report("B", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5B)}, {});
    const std::vector<MonitorReport> forward{a, b};
    const std::vector<MonitorReport> backward{b, a};
    CHECK(classify(forward) == classify(backward));
    CHECK(serialize_verdict(classify(forward)) == serialize_verdict(classify(backward)));
}

TEST_CASE("classify on identical reports is never Polymorphic", "[analyzer]") {
    const auto report = raw_report("A", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A)}, {});
    const std::vector<MonitorReport> reports{report, report};
    CHECK(classify(reports).classification == Classification::Traditional);

    const std::vector<MonitorReport> inert{raw_report("A", {}, {}), raw_report("A", {}, {})};
    CHECK(classify(inert).classification == Classification::NonReplicating);
}

TEST_CASE("a third diverging report flips Traditional to Polymorphic", "[analyzer]") {
    const auto a = raw_report("A", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A)}, {});
    const auto b = raw_report("B", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A)}, {});
    const auto c = raw_report("C", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5B)}, {});
    const std::vector<MonitorReport> two{a, b};
    const std::vector<MonitorReport> three{a, b, c};
    CHECK(classify(two).classification == Classification::Traditional);
    CHECK(classify(three).classification == Classification::Polymorphic);
}

TEST_CASE("evidence is monotone: more reports never clear Polymorphic", "[analyzer][property]") {
    std::mt19937_64 gen(31337);
    const char* paths[][2] = {{"%SYSROOT%/a.exe", "/s/a.exe"},
                              {"%SYSROOT%/b.scr", "/s/b.scr"},
                              {"%SYSROOT%/c.dll", "/s/c.dll"}};
    const std::string md5s[] = {kMd5A, kMd5B, "cccccccccccccccccccccccccccccccc"};

    for (int round = 0; round < 100; ++round) {
        std::vector<MonitorReport> reports;
        for (std::size_t i = 0; i < 5; ++i) {
            std::vector<OffspringRecord> offspring;
            for (const auto& path : paths) {
                if (gen() % 3 != 0) {
                    offspring.push_back(offspring_at(path[0], path[1], md5s[gen() % 3]));
                }
            }
            std::vector<BehaviorEvent> events;
            if (gen() % 4 == 0) {
                events.push_back(BehaviorEvent{0, 1, EventKind::RegSet,
                                               jsonu::json{{"key", "K"}, {"value", "v"}}});
            }
            reports.push_back(raw_report("E" + std::to_string(i), offspring, events));
        }

        bool was_polymorphic = false;
        for (std::size_t n = 2; n <= reports.size(); ++n) {
            const std::vector<MonitorReport> prefix(reports.begin(), reports.begin() + n);
            const bool now_polymorphic =
                classify(prefix).classification == Classification::Polymorphic;
            CAPTURE(round, n);
            if (was_polymorphic) {
                CHECK(now_polymorphic);
            }
            was_polymorphic = now_polymorphic;
        }
    }
}

TEST_CASE("verdict serialization is canonical and round-trips", "[analyzer][json]") {
    const auto a = raw_report("A", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A)}, {});
    const auto b = raw_report("B", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5B)}, {});
    const std::vector<MonitorReport> reports{a, b};
    const Verdict verdict = classify(reports);

    const std::string bytes = serialize_verdict(verdict);
    CHECK(bytes == serialize_verdict(verdict));
    CHECK(bytes.back() == '\n');
    CHECK(parse_verdict(bytes) == verdict);

    SECTION("Traditional verdicts serialize with empty evidence arrays") {
        const auto t1 = raw_report("A", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A)}, {});
        const auto t2 = raw_report("B", {offspring_at("%SYSROOT%/a.exe", "/s/a.exe", kMd5A)}, {});
        const std::vector<MonitorReport> traditional{t1, t2};
        const std::string traditional_bytes = serialize_verdict(classify(traditional));
        CHECK(traditional_bytes.find("\"offspring_divergences\":[]") != std::string::npos);
        CHECK(traditional_bytes.find("\"activity_deltas\":[]") != std::string::npos);
        CHECK(traditional_bytes.find("\"classification\":\"Traditional\"") != std::string::npos);
    }

    SECTION("schema violations are named") {
        CHECK_THROWS_MATCHES(parse_verdict("{\"classification\":\"Traditional\"}"), SchemaError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("evidence")));
        auto j = jsonu::parse_text(bytes, "t");
        j["classification"] = "Sneaky";
        CHECK_THROWS_AS(parse_verdict(jsonu::canonical_bytes(j)), SchemaError);
    }
}
