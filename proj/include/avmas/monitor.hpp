#pragma once

// The monitoring side: executes a specimen inside one virtual environment,
// captures every behavior event within the monitoring window, fingerprints
// offspring, and emits a canonical report. One run owns one environment; runs
// for distinct environments are independent and may execute in parallel.

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "avmas/env.hpp"
#include "avmas/errors.hpp"
#include "avmas/md5.hpp"
#include "avmas/report.hpp"
#include "avmas/specimen.hpp"

namespace avmas {

namespace detail {

class MonitorRun {
public:
    MonitorRun(const SpecimenProgram& program, EnvProfile profile, MonitorConfig config)
        : program_(program),
          config_(config),
          env_(std::move(profile)),
          window_end_ms_(env_.clock_ms() + static_cast<std::uint64_t>(config.window_seconds) * 1000) {}

    MonitorReport run() {
        execute_block(program_.instructions);

        MonitorReport report;
        report.specimen_id = program_.specimen_id.hex();
        report.env_profile = env_.profile();
        report.config = config_;
        report.events = std::move(events_);
        report.truncated = truncated_;

        // Offspring: executable-class files that exist at window end and were
        // created by the run. A file modified after creation is fingerprinted
        // in its final state.
        for (const auto& [path, node] : env_.files()) {
            if (!node.executable_class() || !created_paths_.contains(path)) {
                continue;
            }
            OffspringRecord record;
            record.canonical_path = canonicalize_path(env_.profile(), path);
            record.expanded_path = path;
            record.size_bytes = node.content.size();
            record.md5 = digest_bytes(node.content).hex();
            record.created_at_ms = node.created_at_ms;
            report.offspring.push_back(std::move(record));
        }
        std::sort(report.offspring.begin(), report.offspring.end(),
                  [](const OffspringRecord& a, const OffspringRecord& b) {
                      return a.canonical_path < b.canonical_path;
                  });
        return report;
    }

    const VirtualEnvironment& environment() const { return env_; }

private:
    // Advances the clock, clamping at the window end. Returns false and
    // records the truncation when the advance would cross it.
    bool charge(std::uint64_t millis) {
        if (env_.clock_ms() + millis > window_end_ms_) {
            env_.advance_clock_ms(window_end_ms_ - env_.clock_ms());
            truncate("window");
            return false;
        }
        env_.advance_clock_ms(millis);
        return true;
    }

    // Counts the instruction against max_instructions and charges its 1 ms
    // cost. Returns false when the run is over.
    bool begin_instruction() {
        if (instructions_executed_ == config_.max_instructions) {
            truncate("max_instructions");
            return false;
        }
        ++instructions_executed_;
        return charge(1);
    }

    void truncate(const char* reason) {
        truncated_ = true;
        stopped_ = true;
        emit(EventKind::Truncated, jsonu::json{{"reason", reason}});
    }

    void emit(EventKind kind, jsonu::json details) {
        BehaviorEvent event;
        event.seq = next_seq_++;
        event.t_virtual_ms = env_.clock_ms();
        event.kind = kind;
        event.details = std::move(details);
        events_.push_back(std::move(event));
    }

    void execute_block(const std::vector<Instruction>& block) {
        for (const Instruction& instruction : block) {
            if (stopped_) {
                return;
            }
            if (!begin_instruction()) {
                return;
            }
            std::visit([&](const auto& op) { execute(op); }, instruction.op);
        }
    }

    void write_and_emit(const std::string& path, const std::string& content) {
        const auto result = env_.fs_write(path, content);
        jsonu::json details{{"path", path}};
        if (is_executable_path(path)) {
            details["md5"] = digest_bytes(content).hex();
            details["size_bytes"] = content.size();
        }
        if (result.created) {
            created_paths_.insert(path);
        }
        emit(result.created ? EventKind::FileCreate : EventKind::FileModify, std::move(details));
    }

    void execute(const ReplicateOp& op) {
        const std::string offspring = render_offspring(program_, op.strategy, env_.rng());
        write_and_emit(expand_path(env_.profile(), op.path_template), offspring);
    }

    void execute(const WriteFileOp& op) {
        write_and_emit(expand_path(env_.profile(), op.path_template), op.content);
    }

    void execute(const DeleteFileOp& op) {
        const std::string path = expand_path(env_.profile(), op.path_template);
        try {
            env_.fs_delete(path);
            emit(EventKind::FileDelete, jsonu::json{{"path", path}});
        } catch (const NotFoundError&) {
            emit(EventKind::FailedAction, jsonu::json{{"action", "fs_delete"}, {"path", path}});
        }
    }

    void execute(const RegSetOp& op) {
        env_.reg_set(op.key, op.value);
        emit(EventKind::RegSet, jsonu::json{{"key", op.key}, {"value", op.value}});
    }

    void execute(const RegDeleteOp& op) {
        // A delete of a missing key is a recorded no-op.
        env_.reg_delete(op.key);
        emit(EventKind::RegDelete, jsonu::json{{"key", op.key}});
    }

    void execute(const SpawnOp& op) {
        const std::uint32_t pid = env_.proc_spawn(op.name);
        spawned_pids_.push_back(pid);
        emit(EventKind::ProcSpawn, jsonu::json{{"name", op.name}, {"pid", pid}});
    }

    void execute(const ExitProcOp& op) {
        const std::string ref = op.last ? "last" : std::to_string(op.ordinal);
        std::uint32_t pid = 0;
        if (op.last) {
            if (spawned_pids_.empty()) {
                emit(EventKind::FailedAction, jsonu::json{{"action", "proc_exit"}, {"ref", ref}});
                return;
            }
            pid = spawned_pids_.back();
        } else {
            if (op.ordinal > spawned_pids_.size()) {
                emit(EventKind::FailedAction, jsonu::json{{"action", "proc_exit"}, {"ref", ref}});
                return;
            }
            pid = spawned_pids_[op.ordinal - 1];
        }
        try {
            env_.proc_exit(pid);
            emit(EventKind::ProcExit, jsonu::json{{"pid", pid}});
        } catch (const StateError&) {
            emit(EventKind::FailedAction, jsonu::json{{"action", "proc_exit"}, {"ref", ref}});
        }
    }

    void execute(const SleepOp& op) { charge(op.millis); }

    void execute(const RepeatOp& op) {
        for (std::uint32_t i = 0; i < op.count && !stopped_; ++i) {
            execute_block(op.body);
        }
    }

    const SpecimenProgram& program_;
    MonitorConfig config_;
    VirtualEnvironment env_;
    std::uint64_t window_end_ms_;
    std::vector<BehaviorEvent> events_;
    std::set<std::string> created_paths_;
    std::vector<std::uint32_t> spawned_pids_;
    std::uint64_t next_seq_ = 0;
    std::uint64_t instructions_executed_ = 0;
    bool truncated_ = false;
    bool stopped_ = false;
};

}  // namespace detail

/// Interprets the program inside a fresh environment built from `profile`,
/// capturing one event per environment mutation. Execution stops at program
/// end, at the monitoring window, or at the instruction budget, whichever
/// comes first; the two cutoffs emit a final Truncated event.
///
/// Precondition: the program validates cleanly.
inline MonitorReport execute_and_monitor(const SpecimenProgram& program, const EnvProfile& profile,
                                         const MonitorConfig& config = {}) {
    validate_config(config);
    const auto diagnostics = validate(program);
    if (!diagnostics.empty()) {
        throw ValidationError("program", "program has validation diagnostics; first: line " +
                                             std::to_string(diagnostics.front().line) + ": " +
                                             diagnostics.front().message);
    }
    detail::MonitorRun run(program, profile, config);
    return run.run();
}

struct MonitoredRunTrace {
    MonitorReport report;
    VirtualEnvironment environment;  // final state, for instrumented checks
};

/// Variant that also exposes the final environment, so captured events can be
/// checked against the environment's mutation counters and file contents.
inline MonitoredRunTrace execute_and_monitor_traced(const SpecimenProgram& program,
                                                    const EnvProfile& profile,
                                                    const MonitorConfig& config = {}) {
    validate_config(config);
    const auto diagnostics = validate(program);
    if (!diagnostics.empty()) {
        throw ValidationError("program", "program has validation diagnostics");
    }
    detail::MonitorRun run(program, profile, config);
    MonitorReport report = run.run();
    return MonitoredRunTrace{std::move(report), run.environment()};
}

}  // namespace avmas
