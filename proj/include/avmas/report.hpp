#pragma once

// The monitor report: the canonical, deterministic record of one monitored
// run. Reports carry only virtual time, so identical runs serialize to
// byte-identical files; they are the wire format between the monitoring and
// analysis sides.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "avmas/env.hpp"
#include "avmas/errors.hpp"
#include "avmas/json_util.hpp"
#include "avmas/md5.hpp"

namespace avmas {

inline constexpr int kReportVersion = 1;
inline constexpr std::string_view kReportFileSuffix = ".avmas.json";

enum class EventKind {
    FileCreate,
    FileModify,
    FileDelete,
    RegSet,
    RegDelete,
    ProcSpawn,
    ProcExit,
    FailedAction,
    Truncated,
};

inline std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::FileCreate: return "FileCreate";
        case EventKind::FileModify: return "FileModify";
        case EventKind::FileDelete: return "FileDelete";
        case EventKind::RegSet: return "RegSet";
        case EventKind::RegDelete: return "RegDelete";
        case EventKind::ProcSpawn: return "ProcSpawn";
        case EventKind::ProcExit: return "ProcExit";
        case EventKind::FailedAction: return "FailedAction";
        case EventKind::Truncated: return "Truncated";
    }
    return "Unknown";
}

inline EventKind event_kind_from_string(std::string_view name, const std::string& context) {
    if (name == "FileCreate") return EventKind::FileCreate;
    if (name == "FileModify") return EventKind::FileModify;
    if (name == "FileDelete") return EventKind::FileDelete;
    if (name == "RegSet") return EventKind::RegSet;
    if (name == "RegDelete") return EventKind::RegDelete;
    if (name == "ProcSpawn") return EventKind::ProcSpawn;
    if (name == "ProcExit") return EventKind::ProcExit;
    if (name == "FailedAction") return EventKind::FailedAction;
    if (name == "Truncated") return EventKind::Truncated;
    throw SchemaError(context, "unknown event kind \"" + std::string(name) + "\"");
}

struct MonitorConfig {
    std::uint32_t window_seconds = 300;
    std::uint64_t max_instructions = 1'000'000;

    friend bool operator==(const MonitorConfig&, const MonitorConfig&) = default;
};

inline void validate_config(const MonitorConfig& config) {
    if (config.window_seconds == 0) {
        throw ValidationError("window_seconds", "must be > 0");
    }
    if (config.max_instructions == 0) {
        throw ValidationError("max_instructions", "must be > 0");
    }
}

/// One captured behavior. `details` is a flat JSON object whose keys depend
/// on the kind:
///   FileCreate/FileModify: path (+ md5, size_bytes for executable-class)
///   FileDelete:            path
///   RegSet:                key, value
///   RegDelete:             key
///   ProcSpawn:             name, pid
///   ProcExit:              pid
///   FailedAction:          action (+ path or ref)
///   Truncated:             reason ("window" | "max_instructions")
struct BehaviorEvent {
    std::uint64_t seq = 0;
    std::uint64_t t_virtual_ms = 0;
    EventKind kind = EventKind::FileCreate;
    jsonu::json details = jsonu::json::object();

    friend bool operator==(const BehaviorEvent&, const BehaviorEvent&) = default;
};

struct OffspringRecord {
    std::string canonical_path;  // template form
    std::string expanded_path;
    std::uint64_t size_bytes = 0;
    std::string md5;
    std::uint64_t created_at_ms = 0;

    friend bool operator==(const OffspringRecord&, const OffspringRecord&) = default;
};

struct MonitorReport {
    int report_version = kReportVersion;
    std::string specimen_id;  // 32-char lowercase hex
    EnvProfile env_profile;
    MonitorConfig config;
    std::vector<BehaviorEvent> events;
    std::vector<OffspringRecord> offspring;
    bool truncated = false;

    friend bool operator==(const MonitorReport&, const MonitorReport&) = default;
};

namespace detail {

inline void validate_event_details(const BehaviorEvent& event, const std::string& context) {
    const jsonu::json& details = event.details;
    const auto req_detail_string = [&](std::string_view key) {
        return jsonu::req_string(details, context + ".details", key);
    };
    switch (event.kind) {
        case EventKind::FileCreate:
        case EventKind::FileModify: {
            const std::string path = req_detail_string("path");
            if (is_executable_path(path)) {
                jsonu::reject_unknown(details, context + ".details", {"path", "md5", "size_bytes"});
                const std::string md5 = req_detail_string("md5");
                if (!is_md5_hex(md5)) {
                    throw SchemaError(context + ".details.md5",
                                      "must be 32 lowercase hex characters");
                }
                jsonu::req_uint(details, context + ".details", "size_bytes");
            } else {
                jsonu::reject_unknown(details, context + ".details", {"path"});
            }
            break;
        }
        case EventKind::FileDelete:
            jsonu::reject_unknown(details, context + ".details", {"path"});
            req_detail_string("path");
            break;
        case EventKind::RegSet:
            jsonu::reject_unknown(details, context + ".details", {"key", "value"});
            req_detail_string("key");
            req_detail_string("value");
            break;
        case EventKind::RegDelete:
            jsonu::reject_unknown(details, context + ".details", {"key"});
            req_detail_string("key");
            break;
        case EventKind::ProcSpawn:
            jsonu::reject_unknown(details, context + ".details", {"name", "pid"});
            req_detail_string("name");
            jsonu::req_uint(details, context + ".details", "pid");
            break;
        case EventKind::ProcExit:
            jsonu::reject_unknown(details, context + ".details", {"pid"});
            jsonu::req_uint(details, context + ".details", "pid");
            break;
        case EventKind::FailedAction: {
            jsonu::reject_unknown(details, context + ".details", {"action", "path", "ref"});
            req_detail_string("action");
            const bool has_path = details.contains("path");
            const bool has_ref = details.contains("ref");
            if (has_path == has_ref) {
                throw SchemaError(context + ".details",
                                  "FailedAction requires exactly one of path, ref");
            }
            req_detail_string(has_path ? "path" : "ref");
            break;
        }
        case EventKind::Truncated: {
            jsonu::reject_unknown(details, context + ".details", {"reason"});
            const std::string reason = req_detail_string("reason");
            if (reason != "window" && reason != "max_instructions") {
                throw SchemaError(context + ".details.reason",
                                  "must be \"window\" or \"max_instructions\"");
            }
            break;
        }
    }
}

}  // namespace detail

inline jsonu::json report_to_json(const MonitorReport& report) {
    jsonu::json events = jsonu::json::array();
    for (const BehaviorEvent& event : report.events) {
        events.push_back(jsonu::json{{"seq", event.seq},
                                     {"t_virtual_ms", event.t_virtual_ms},
                                     {"kind", std::string(to_string(event.kind))},
                                     {"details", event.details}});
    }
    jsonu::json offspring = jsonu::json::array();
    for (const OffspringRecord& record : report.offspring) {
        offspring.push_back(jsonu::json{{"canonical_path", record.canonical_path},
                                        {"expanded_path", record.expanded_path},
                                        {"size_bytes", record.size_bytes},
                                        {"md5", record.md5},
                                        {"created_at_ms", record.created_at_ms}});
    }
    return jsonu::json{{"report_version", report.report_version},
                       {"specimen_id", report.specimen_id},
                       {"env_profile", profile_to_json(report.env_profile)},
                       {"config",
                        jsonu::json{{"window_seconds", report.config.window_seconds},
                                    {"max_instructions", report.config.max_instructions}}},
                       {"events", events},
                       {"offspring", offspring},
                       {"truncated", report.truncated}};
}

/// Canonical JSON bytes: sorted keys, no insignificant whitespace, one
/// trailing newline. Byte-identical for identical runs.
inline std::string serialize_report(const MonitorReport& report) {
    return jsonu::canonical_bytes(report_to_json(report));
}

inline MonitorReport parse_report(std::string_view bytes) {
    const jsonu::json root = jsonu::parse_text(bytes, "report");
    jsonu::reject_unknown(root, "report",
                          {"report_version", "specimen_id", "env_profile", "config", "events",
                           "offspring", "truncated"});

    const std::uint64_t version = jsonu::req_uint(root, "report", "report_version");
    if (version != static_cast<std::uint64_t>(kReportVersion)) {
        throw SchemaError("report.report_version",
                          "unknown version " + std::to_string(version) + " (expected " +
                              std::to_string(kReportVersion) + ")");
    }

    MonitorReport report;
    report.report_version = kReportVersion;
    report.specimen_id = jsonu::req_string(root, "report", "specimen_id");
    if (!is_md5_hex(report.specimen_id)) {
        throw SchemaError("report.specimen_id", "must be 32 lowercase hex characters");
    }
    report.env_profile =
        profile_from_json(jsonu::req_object(root, "report", "env_profile"), "report.env_profile");

    const jsonu::json& config = jsonu::req_object(root, "report", "config");
    jsonu::reject_unknown(config, "report.config", {"window_seconds", "max_instructions"});
    report.config.window_seconds =
        static_cast<std::uint32_t>(jsonu::req_uint(config, "report.config", "window_seconds"));
    report.config.max_instructions = jsonu::req_uint(config, "report.config", "max_instructions");
    validate_config(report.config);

    const jsonu::json& events = jsonu::req_array(root, "report", "events");
    for (std::size_t i = 0; i < events.size(); ++i) {
        const std::string context = "report.events[" + std::to_string(i) + "]";
        const jsonu::json& entry = events[i];
        jsonu::reject_unknown(entry, context, {"seq", "t_virtual_ms", "kind", "details"});
        BehaviorEvent event;
        event.seq = jsonu::req_uint(entry, context, "seq");
        event.t_virtual_ms = jsonu::req_uint(entry, context, "t_virtual_ms");
        event.kind = event_kind_from_string(jsonu::req_string(entry, context, "kind"),
                                            context + ".kind");
        event.details = jsonu::req_object(entry, context, "details");
        detail::validate_event_details(event, context);
        if (!report.events.empty()) {
            if (event.seq <= report.events.back().seq) {
                throw SchemaError(context + ".seq", "must be strictly increasing");
            }
            if (event.t_virtual_ms < report.events.back().t_virtual_ms) {
                throw SchemaError(context + ".t_virtual_ms", "must be non-decreasing");
            }
        }
        report.events.push_back(std::move(event));
    }

    const jsonu::json& offspring = jsonu::req_array(root, "report", "offspring");
    for (std::size_t i = 0; i < offspring.size(); ++i) {
        const std::string context = "report.offspring[" + std::to_string(i) + "]";
        const jsonu::json& entry = offspring[i];
        jsonu::reject_unknown(
            entry, context, {"canonical_path", "expanded_path", "size_bytes", "md5", "created_at_ms"});
        OffspringRecord record;
        record.canonical_path = jsonu::req_string(entry, context, "canonical_path");
        record.expanded_path = jsonu::req_string(entry, context, "expanded_path");
        record.size_bytes = jsonu::req_uint(entry, context, "size_bytes");
        record.md5 = jsonu::req_string(entry, context, "md5");
        if (!is_md5_hex(record.md5)) {
            throw SchemaError(context + ".md5", "must be 32 lowercase hex characters");
        }
        record.created_at_ms = jsonu::req_uint(entry, context, "created_at_ms");
        report.offspring.push_back(std::move(record));
    }

    report.truncated = jsonu::req_bool(root, "report", "truncated");
    return report;
}

inline MonitorReport load_report_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw SchemaError("report", "cannot open report file: " + file.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_report(text);
}

inline void write_file_bytes(const std::filesystem::path& file, std::string_view bytes) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open for writing: " + file.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error("write failed: " + file.string());
    }
}

}  // namespace avmas
