// avmas - run synthetic specimens in isolated virtual environments, monitor
// their behavior, and classify them as traditional or polymorphic by
// cross-environment report comparison.
//
// Exit codes: 0 success, 1 bench disagreement, 2 input/usage error,
// 3 report-compatibility error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avmas/analyzer.hpp"
#include "avmas/corpus.hpp"
#include "avmas/harness.hpp"
#include "avmas/monitor.hpp"
#include "avmas/report.hpp"
#include "avmas/specimen.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBenchDisagreement = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIncompatibleReports = 3;

std::string read_file_or_exit(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "error: " << what << " not found: " << path.string() << "\n";
        std::exit(kExitUsage);
    }
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::filesystem::path default_results_dir() {
    if (const char* env = std::getenv("AVMAS_RESULTS"); env != nullptr && *env != '\0') {
        return env;
    }
    return "results";
}

std::vector<std::uint64_t> parse_seed_csv(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const auto comma = csv.find(',', pos);
        const std::string item =
            csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (item.empty()) {
            throw avmas::ValidationError("seeds", "empty seed in list");
        }
        std::size_t consumed = 0;
        const std::uint64_t value = std::stoull(item, &consumed);
        if (consumed != item.size()) {
            throw avmas::ValidationError("seeds", "not an unsigned integer: " + item);
        }
        seeds.push_back(value);
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    return seeds;
}

int cmd_monitor(const std::string& specimen_file, const std::string& profile_file,
                const avmas::MonitorConfig& config, std::string out_file) {
    const std::string source = read_file_or_exit(specimen_file, "specimen");
    const avmas::SpecimenProgram program = avmas::parse_specimen(source);
    const auto diagnostics = avmas::validate(program);
    if (!diagnostics.empty()) {
        for (const auto& diagnostic : diagnostics) {
            std::cerr << specimen_file << ":" << diagnostic.line << ":" << diagnostic.column
                      << ": " << diagnostic.message << "\n";
        }
        return kExitUsage;
    }
    if (!std::filesystem::exists(profile_file)) {
        std::cerr << "error: profile not found: " << profile_file << "\n";
        return kExitUsage;
    }
    const avmas::EnvProfile profile = avmas::load_profile_file(profile_file);
    const avmas::MonitorReport report = avmas::execute_and_monitor(program, profile, config);
    if (out_file.empty()) {
        out_file = std::filesystem::path(specimen_file).stem().string() + "-" + profile.env_id +
                   std::string(avmas::kReportFileSuffix);
    }
    avmas::write_file_bytes(out_file, avmas::serialize_report(report));
    std::cout << out_file << "\n";
    return kExitOk;
}

int cmd_analyze(const std::vector<std::string>& report_files, const std::string& out_file) {
    if (report_files.size() < 2) {
        std::cerr << "error: at least 2 report files required\n";
        return kExitUsage;
    }
    std::vector<avmas::MonitorReport> reports;
    reports.reserve(report_files.size());
    for (const std::string& file : report_files) {
        const std::string bytes = read_file_or_exit(file, "report");
        reports.push_back(avmas::parse_report(bytes));
    }
    const avmas::Verdict verdict = avmas::classify(reports);
    avmas::write_file_bytes(out_file, avmas::serialize_verdict(verdict));
    std::string word(avmas::to_string(verdict.classification));
    for (char& c : word) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    std::cout << word << "\n";
    return kExitOk;
}

int cmd_run(const std::string& specimen_file, const avmas::RunOptions& options) {
    const std::string source = read_file_or_exit(specimen_file, "specimen");
    const avmas::SpecimenProgram program = avmas::parse_specimen(source);
    const avmas::RunOutcome outcome = avmas::run_specimen(program, options);
    std::cout << "run_id: " << outcome.record.run_id << "\n";
    std::string word(avmas::to_string(outcome.verdict.classification));
    for (char& c : word) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    std::cout << word << "\n";
    return kExitOk;
}

int cmd_bench(const std::string& corpus_dir, const avmas::RunOptions& options) {
    if (!std::filesystem::exists(std::filesystem::path(corpus_dir) / avmas::kManifestFileName)) {
        std::cerr << "error: no manifest.json in " << corpus_dir << "\n";
        return kExitUsage;
    }
    const avmas::BenchResult result = avmas::run_bench(corpus_dir, options);
    std::cout << avmas::format_bench_table(result);
    return result.all_match() ? kExitOk : kExitBenchDisagreement;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AVMAS: virtual-environment behavior monitoring and virus-class analysis"};
    app.require_subcommand(1);

    avmas::MonitorConfig config;
    avmas::RunOptions options;
    options.results_dir = default_results_dir();
    std::string seeds_csv;

    // monitor
    auto* monitor_cmd = app.add_subcommand("monitor", "execute one specimen in one environment");
    std::string specimen_file;
    std::string profile_file;
    std::string out_file;
    monitor_cmd->add_option("specimen", specimen_file, "specimen .spec file")->required();
    monitor_cmd->add_option("profile", profile_file, "environment profile JSON file")->required();
    monitor_cmd->add_option("--window", config.window_seconds, "monitoring window, seconds");
    monitor_cmd->add_option("--max-instructions", config.max_instructions, "instruction budget");
    monitor_cmd->add_option("--out", out_file, "report output path");

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "compare reports and classify");
    std::vector<std::string> report_files;
    std::string verdict_out = "verdict" + std::string(avmas::kVerdictFileSuffix);
    analyze_cmd->add_option("reports", report_files, "two or more report files");
    analyze_cmd->add_option("--out", verdict_out, "verdict output path");

    // run
    auto* run_cmd = app.add_subcommand("run", "monitor in N environments, then analyze");
    std::string run_specimen_file;
    run_cmd->add_option("specimen", run_specimen_file, "specimen .spec file")->required();
    run_cmd->add_option("--envs", options.env_count, "number of environments");
    run_cmd->add_option("--seeds", seeds_csv, "comma-separated seeds, one per environment");
    run_cmd->add_option("--window", config.window_seconds, "monitoring window, seconds");
    run_cmd->add_option("--max-instructions", config.max_instructions, "instruction budget");
    run_cmd->add_option("--results-dir", options.results_dir,
                        "results directory (env AVMAS_RESULTS)");

    // corpus generate
    auto* corpus_cmd = app.add_subcommand("corpus", "corpus utilities");
    corpus_cmd->require_subcommand(1);
    auto* generate_cmd = corpus_cmd->add_subcommand("generate", "write the 20-specimen corpus");
    std::string corpus_out = "corpus";
    generate_cmd->add_option("--out", corpus_out, "output directory");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "run the corpus and compare against labels");
    std::string bench_corpus_dir;
    bench_cmd->add_option("corpus_dir", bench_corpus_dir, "corpus directory with manifest.json")
        ->required();
    bench_cmd->add_option("--window", config.window_seconds, "monitoring window, seconds");
    bench_cmd->add_option("--max-instructions", config.max_instructions, "instruction budget");
    bench_cmd->add_option("--results-dir", options.results_dir,
                          "results directory (env AVMAS_RESULTS)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        options.config = config;
        if (!seeds_csv.empty()) {
            options.seeds = parse_seed_csv(seeds_csv);
        }
        if (monitor_cmd->parsed()) {
            return cmd_monitor(specimen_file, profile_file, config, out_file);
        }
        if (analyze_cmd->parsed()) {
            return cmd_analyze(report_files, verdict_out);
        }
        if (run_cmd->parsed()) {
            return cmd_run(run_specimen_file, options);
        }
        if (corpus_cmd->parsed()) {
            const avmas::CorpusManifest manifest = avmas::generate_corpus(corpus_out);
            std::cout << corpus_out << ": " << manifest.entries.size() << " specimens\n";
            return kExitOk;
        }
        if (bench_cmd->parsed()) {
            return cmd_bench(bench_corpus_dir, options);
        }
    } catch (const avmas::PreconditionError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitIncompatibleReports;
    } catch (const avmas::Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
