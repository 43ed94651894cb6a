#pragma once

// End-to-end orchestration: build N environment profiles, run the monitors
// (in parallel - environments are independent), analyze, and persist
// everything under a content-addressed results directory.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <span>
#include <string>
#include <vector>

#include "avmas/analyzer.hpp"
#include "avmas/corpus.hpp"
#include "avmas/env.hpp"
#include "avmas/errors.hpp"
#include "avmas/md5.hpp"
#include "avmas/monitor.hpp"
#include "avmas/specimen.hpp"

namespace avmas {

struct RunOptions {
    std::size_t env_count = 2;
    std::vector<std::uint64_t> seeds;  // empty: 1..env_count
    MonitorConfig config;
    std::filesystem::path results_dir = "results";

    friend bool operator==(const RunOptions&, const RunOptions&) = default;
};

/// Profiles templated over the environment index: env<i>, host<i>, user<i>,
/// shared sysroot /sys, seed from `seeds`.
inline std::vector<EnvProfile> make_default_profiles(std::size_t count,
                                                     std::span<const std::uint64_t> seeds) {
    if (count < 2) {
        throw ValidationError("envs", "at least 2 environments required");
    }
    if (!seeds.empty() && seeds.size() != count) {
        throw ValidationError("seeds", "seed count must equal environment count");
    }
    std::vector<EnvProfile> profiles;
    profiles.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::string n = std::to_string(i + 1);
        EnvProfile profile;
        profile.env_id = "env" + n;
        profile.hostname = "host" + n;
        profile.username = "user" + n;
        profile.sysroot = "/sys";
        profile.rng_seed = seeds.empty() ? i + 1 : seeds[i];
        profile.start_time = 0;
        profiles.push_back(std::move(profile));
    }
    return profiles;
}

struct RunRecord {
    std::string run_id;
    std::vector<std::string> report_files;
    std::string verdict_file;
    std::uint64_t created_at_unix = 0;  // wall-clock metadata, excluded from canonical content

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct RunOutcome {
    RunRecord record;
    Verdict verdict;
    std::vector<MonitorReport> reports;
    std::filesystem::path run_dir;
};

/// Content address of one run: digest over the specimen id, the full profile
/// set, and the monitoring config, so reruns of identical inputs land in the
/// same directory with identical bytes.
inline std::string compute_run_id(const SpecimenProgram& program,
                                  std::span<const EnvProfile> profiles,
                                  const MonitorConfig& config) {
    jsonu::json profile_array = jsonu::json::array();
    for (const EnvProfile& profile : profiles) {
        profile_array.push_back(profile_to_json(profile));
    }
    Md5 hasher;
    hasher.update(program.specimen_id.hex());
    hasher.update("\n");
    hasher.update(profile_array.dump());
    hasher.update("\n");
    hasher.update(jsonu::json{{"window_seconds", config.window_seconds},
                              {"max_instructions", config.max_instructions}}
                      .dump());
    return hasher.finish().hex();
}

inline jsonu::json record_to_json(const RunRecord& record) {
    return jsonu::json{{"run_id", record.run_id},
                       {"report_files", record.report_files},
                       {"verdict_file", record.verdict_file},
                       {"created_at_unix", record.created_at_unix}};
}

inline RunOutcome run_specimen_with_profiles(const SpecimenProgram& program,
                                             std::span<const EnvProfile> profiles,
                                             const MonitorConfig& config,
                                             const std::filesystem::path& results_dir) {
    // Monitor runs are independent; execute them concurrently and join in
    // profile order so output stays deterministic.
    std::vector<std::future<MonitorReport>> futures;
    futures.reserve(profiles.size());
    for (const EnvProfile& profile : profiles) {
        futures.push_back(std::async(std::launch::async, [&program, &profile, &config] {
            return execute_and_monitor(program, profile, config);
        }));
    }
    std::vector<MonitorReport> reports;
    reports.reserve(profiles.size());
    for (auto& future : futures) {
        reports.push_back(future.get());
    }

    const Verdict verdict = classify(reports);

    RunOutcome outcome;
    outcome.record.run_id = compute_run_id(program, profiles, config);
    outcome.run_dir = results_dir / outcome.record.run_id;
    std::error_code ec;
    std::filesystem::create_directories(outcome.run_dir, ec);
    if (ec) {
        throw Error("cannot create results directory " + outcome.run_dir.string() + ": " +
                    ec.message());
    }

    for (const MonitorReport& report : reports) {
        const std::string file_name =
            "report-" + report.env_profile.env_id + std::string(kReportFileSuffix);
        write_file_bytes(outcome.run_dir / file_name, serialize_report(report));
        outcome.record.report_files.push_back(file_name);
    }
    outcome.record.verdict_file = "verdict" + std::string(kVerdictFileSuffix);
    write_file_bytes(outcome.run_dir / outcome.record.verdict_file, serialize_verdict(verdict));
    outcome.record.created_at_unix = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    write_file_bytes(outcome.run_dir / "record.json",
                     jsonu::canonical_bytes(record_to_json(outcome.record)));

    outcome.verdict = verdict;
    outcome.reports = std::move(reports);
    return outcome;
}

/// Runs one specimen through N environments, classifies, and persists under
/// `<results_dir>/<run_id>/`.
inline RunOutcome run_specimen(const SpecimenProgram& program, const RunOptions& options) {
    validate_config(options.config);
    const std::vector<EnvProfile> profiles =
        make_default_profiles(options.env_count, options.seeds);
    return run_specimen_with_profiles(program, profiles, options.config, options.results_dir);
}

struct BenchRow {
    std::string analog_name;
    std::string ground_truth;
    std::string verdict;
    bool match = false;
};

struct BenchResult {
    std::vector<BenchRow> rows;
    std::size_t agreement = 0;

    bool all_match() const { return agreement == rows.size(); }
};

/// Verdict word mapped to manifest vocabulary for the comparison table;
/// NonReplicating never matches a ground-truth label.
inline std::string verdict_label(Classification classification) {
    return std::string(to_string(classification));
}

/// Runs the full pipeline over every corpus entry and compares each verdict
/// against its ground-truth label.
inline BenchResult run_bench(const std::filesystem::path& corpus_dir, const RunOptions& options) {
    const CorpusManifest manifest = load_manifest(corpus_dir);
    BenchResult result;
    for (const CorpusEntry& entry : manifest.entries) {
        const std::filesystem::path specimen_path = corpus_dir / entry.specimen_file;
        std::ifstream in(specimen_path, std::ios::binary);
        if (!in) {
            throw Error("cannot open specimen: " + specimen_path.string());
        }
        std::string source((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const SpecimenProgram program = parse_specimen(source);
        const RunOutcome outcome = run_specimen(program, options);

        BenchRow row;
        row.analog_name = entry.analog_name;
        row.ground_truth = entry.ground_truth;
        row.verdict = verdict_label(outcome.verdict.classification);
        row.match = row.verdict == entry.ground_truth;
        if (row.match) {
            ++result.agreement;
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

/// Human-readable comparison table, one row per specimen plus the final
/// agreement line.
inline std::string format_bench_table(const BenchResult& result) {
    std::size_t name_width = 4;
    for (const BenchRow& row : result.rows) {
        name_width = std::max(name_width, row.analog_name.size());
    }
    std::string out;
    const auto pad = [](std::string text, std::size_t width) {
        text.resize(std::max(width, text.size()), ' ');
        return text;
    };
    out += pad("name", name_width) + "  " + pad("ground-truth", 14) + pad("verdict", 16) + "match\n";
    for (const BenchRow& row : result.rows) {
        out += pad(row.analog_name, name_width) + "  " + pad(row.ground_truth, 14) +
               pad(row.verdict, 16) + (row.match ? "yes" : "NO") + "\n";
    }
    out += "agreement: " + std::to_string(result.agreement) + "/" +
           std::to_string(result.rows.size()) + "\n";
    return out;
}

}  // namespace avmas
