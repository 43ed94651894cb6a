#pragma once

// The analysis side: consumes N >= 2 monitor reports for the same specimen,
// matches offspring across environments by canonical path, compares
// signatures and canonical activity multisets, and issues the verdict. Any
// differing pair is enough to classify the specimen as polymorphic.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "avmas/env.hpp"
#include "avmas/errors.hpp"
#include "avmas/json_util.hpp"
#include "avmas/report.hpp"

namespace avmas {

inline constexpr std::string_view kVerdictFileSuffix = ".verdict.json";

/// Canonicalized event descriptor: event kind plus env-independent detail.
struct ActivityDescriptor {
    std::string kind;
    std::string detail;

    friend auto operator<=>(const ActivityDescriptor&, const ActivityDescriptor&) = default;
};

/// Multiset of canonicalized event descriptors, as descriptor -> count.
using ActivityMultiset = std::map<ActivityDescriptor, std::uint64_t>;

/// Maps every event of the report to (kind, canonical detail): paths
/// canonicalized to template form, pids replaced by spawn-order ordinals,
/// timestamps and sequence numbers dropped. FailedAction and Truncated events
/// are included.
inline ActivityMultiset canonical_activity_set(const MonitorReport& report) {
    // Accepts either integer storage class; pids are non-negative.
    const auto pid_value = [](const jsonu::json& value) -> std::optional<std::uint64_t> {
        if (value.is_number_unsigned()) {
            return value.get<std::uint64_t>();
        }
        if (value.is_number_integer() && value.get<std::int64_t>() >= 0) {
            return static_cast<std::uint64_t>(value.get<std::int64_t>());
        }
        return std::nullopt;
    };

    // Spawn-order ordinals, from ProcSpawn events in sequence order.
    std::map<std::uint64_t, std::uint64_t> pid_ordinals;
    for (const BehaviorEvent& event : report.events) {
        if (event.kind == EventKind::ProcSpawn && event.details.contains("pid")) {
            if (const auto pid = pid_value(event.details["pid"])) {
                pid_ordinals.emplace(*pid, pid_ordinals.size() + 1);
            }
        }
    }
    const auto canonical_pid = [&](std::uint64_t pid) -> std::string {
        auto it = pid_ordinals.find(pid);
        if (it != pid_ordinals.end()) {
            return "p" + std::to_string(it->second);
        }
        return "p?" + std::to_string(pid);  // never spawned in this report
    };

    ActivityMultiset activity;
    for (const BehaviorEvent& event : report.events) {
        std::string detail;
        // Details are flat objects; keys iterate in sorted order.
        for (const auto& [key, value] : event.details.items()) {
            if (!detail.empty()) {
                detail += "|";
            }
            detail += key;
            detail += "=";
            if (key == "path" && value.is_string()) {
                detail += canonicalize_path(report.env_profile, value.get<std::string>());
            } else if (key == "pid" && pid_value(value).has_value()) {
                detail += canonical_pid(*pid_value(value));
            } else if (value.is_string()) {
                detail += value.get<std::string>();
            } else {
                detail += value.dump();
            }
        }
        ++activity[ActivityDescriptor{std::string(to_string(event.kind)), std::move(detail)}];
    }
    return activity;
}

/// One canonical offspring path matched across reports.
struct OffspringMatch {
    enum class Status { Matched, Missing };

    struct Entry {
        std::string env_id;
        std::string md5;
        std::uint64_t size_bytes = 0;

        friend auto operator<=>(const Entry&, const Entry&) = default;
    };

    std::string canonical_path;
    std::vector<Entry> entries;  // sorted by (env_id, md5, size)
    Status status = Status::Matched;

    bool has_divergent_digests() const {
        std::set<std::string_view> distinct;
        for (const Entry& entry : entries) {
            distinct.insert(entry.md5);
        }
        return distinct.size() > 1;
    }

    friend bool operator==(const OffspringMatch&, const OffspringMatch&) = default;
};

inline std::string_view to_string(OffspringMatch::Status status) {
    return status == OffspringMatch::Status::Matched ? "Matched" : "Missing";
}

/// A canonical event descriptor whose per-environment counts disagree.
struct ActivityDelta {
    std::string kind;
    std::string detail;
    std::map<std::string, std::uint64_t> counts_by_env;

    friend bool operator==(const ActivityDelta&, const ActivityDelta&) = default;
};

enum class Classification { Traditional, Polymorphic, NonReplicating };

inline std::string_view to_string(Classification classification) {
    switch (classification) {
        case Classification::Traditional: return "Traditional";
        case Classification::Polymorphic: return "Polymorphic";
        case Classification::NonReplicating: return "NonReplicating";
    }
    return "Unknown";
}

inline Classification classification_from_string(std::string_view name, const std::string& context) {
    if (name == "Traditional") return Classification::Traditional;
    if (name == "Polymorphic") return Classification::Polymorphic;
    if (name == "NonReplicating") return Classification::NonReplicating;
    throw SchemaError(context, "unknown classification \"" + std::string(name) + "\"");
}

struct Verdict {
    Classification classification = Classification::NonReplicating;
    std::vector<OffspringMatch> offspring_divergences;  // evidence
    std::vector<ActivityDelta> activity_deltas;         // evidence
    std::vector<std::string> report_ids;                // env_ids of the inputs, sorted

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

namespace detail {

inline void check_comparable(std::span<const MonitorReport> reports) {
    if (reports.size() < 2) {
        throw PreconditionError("at least 2 reports required");
    }
    for (const MonitorReport& report : reports) {
        if (report.specimen_id != reports.front().specimen_id) {
            throw PreconditionError("reports are not for the same specimen");
        }
        if (!(report.config == reports.front().config)) {
            throw PreconditionError("reports use mismatched monitoring windows");
        }
    }
}

}  // namespace detail

/// Groups offspring across reports by canonical path. A path absent from at
/// least one report is Missing. Output is ordered by canonical path.
inline std::vector<OffspringMatch> pair_offspring(std::span<const MonitorReport> reports) {
    detail::check_comparable(reports);

    struct Group {
        std::set<OffspringMatch::Entry> entries;
        std::set<std::size_t> present_in;  // report indices
    };
    std::map<std::string, Group> groups;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        for (const OffspringRecord& record : reports[i].offspring) {
            Group& group = groups[record.canonical_path];
            group.entries.insert(
                OffspringMatch::Entry{reports[i].env_profile.env_id, record.md5, record.size_bytes});
            group.present_in.insert(i);
        }
    }

    std::vector<OffspringMatch> matches;
    matches.reserve(groups.size());
    for (auto& [canonical_path, group] : groups) {
        OffspringMatch match;
        match.canonical_path = canonical_path;
        match.entries.assign(group.entries.begin(), group.entries.end());
        match.status = group.present_in.size() == reports.size() ? OffspringMatch::Status::Matched
                                                                 : OffspringMatch::Status::Missing;
        matches.push_back(std::move(match));
    }
    return matches;
}

/// The classification rule: Polymorphic iff any matched offspring has
/// divergent digests, any offspring is missing from some report, or the
/// canonical activity multisets differ across any report pair; else
/// Traditional when offspring exist; else NonReplicating. The verdict carries
/// all triggering evidence.
inline Verdict classify(std::span<const MonitorReport> reports) {
    const std::vector<OffspringMatch> matches = pair_offspring(reports);

    Verdict verdict;
    for (const MonitorReport& report : reports) {
        verdict.report_ids.push_back(report.env_profile.env_id);
    }
    std::sort(verdict.report_ids.begin(), verdict.report_ids.end());

    for (const OffspringMatch& match : matches) {
        if (match.status == OffspringMatch::Status::Missing || match.has_divergent_digests()) {
            verdict.offspring_divergences.push_back(match);
        }
    }

    // Activity deltas: descriptors whose counts are not equal across all
    // reports. Counts are keyed by env_id (summed when inputs share one).
    std::vector<ActivityMultiset> activity;
    activity.reserve(reports.size());
    for (const MonitorReport& report : reports) {
        activity.push_back(canonical_activity_set(report));
    }
    std::set<ActivityDescriptor> descriptors;
    for (const ActivityMultiset& multiset : activity) {
        for (const auto& [descriptor, count] : multiset) {
            descriptors.insert(descriptor);
        }
    }
    for (const ActivityDescriptor& descriptor : descriptors) {
        const auto count_in = [&](std::size_t i) -> std::uint64_t {
            auto it = activity[i].find(descriptor);
            return it == activity[i].end() ? 0 : it->second;
        };
        bool differs = false;
        for (std::size_t i = 1; i < reports.size(); ++i) {
            if (count_in(i) != count_in(0)) {
                differs = true;
                break;
            }
        }
        if (!differs) {
            continue;
        }
        ActivityDelta delta;
        delta.kind = descriptor.kind;
        delta.detail = descriptor.detail;
        for (std::size_t i = 0; i < reports.size(); ++i) {
            delta.counts_by_env[reports[i].env_profile.env_id] += count_in(i);
        }
        verdict.activity_deltas.push_back(std::move(delta));
    }

    if (!verdict.offspring_divergences.empty() || !verdict.activity_deltas.empty()) {
        verdict.classification = Classification::Polymorphic;
    } else if (!matches.empty()) {
        verdict.classification = Classification::Traditional;
    } else {
        verdict.classification = Classification::NonReplicating;
    }
    return verdict;
}

inline jsonu::json verdict_to_json(const Verdict& verdict) {
    jsonu::json divergences = jsonu::json::array();
    for (const OffspringMatch& match : verdict.offspring_divergences) {
        jsonu::json entries = jsonu::json::array();
        for (const OffspringMatch::Entry& entry : match.entries) {
            entries.push_back(jsonu::json{
                {"env_id", entry.env_id}, {"md5", entry.md5}, {"size_bytes", entry.size_bytes}});
        }
        divergences.push_back(jsonu::json{{"canonical_path", match.canonical_path},
                                          {"entries", entries},
                                          {"status", std::string(to_string(match.status))}});
    }
    jsonu::json deltas = jsonu::json::array();
    for (const ActivityDelta& delta : verdict.activity_deltas) {
        deltas.push_back(jsonu::json{{"kind", delta.kind},
                                     {"detail", delta.detail},
                                     {"counts", jsonu::json(delta.counts_by_env)}});
    }
    return jsonu::json{
        {"classification", std::string(to_string(verdict.classification))},
        {"evidence",
         jsonu::json{{"offspring_divergences", divergences}, {"activity_deltas", deltas}}},
        {"report_ids", verdict.report_ids}};
}

/// Canonical JSON bytes, same conventions as reports.
inline std::string serialize_verdict(const Verdict& verdict) {
    return jsonu::canonical_bytes(verdict_to_json(verdict));
}

inline Verdict parse_verdict(std::string_view bytes) {
    const jsonu::json root = jsonu::parse_text(bytes, "verdict");
    jsonu::reject_unknown(root, "verdict", {"classification", "evidence", "report_ids"});

    Verdict verdict;
    verdict.classification = classification_from_string(
        jsonu::req_string(root, "verdict", "classification"), "verdict.classification");

    const jsonu::json& evidence = jsonu::req_object(root, "verdict", "evidence");
    jsonu::reject_unknown(evidence, "verdict.evidence",
                          {"offspring_divergences", "activity_deltas"});

    const jsonu::json& divergences =
        jsonu::req_array(evidence, "verdict.evidence", "offspring_divergences");
    for (std::size_t i = 0; i < divergences.size(); ++i) {
        const std::string context = "verdict.evidence.offspring_divergences[" + std::to_string(i) + "]";
        const jsonu::json& entry_json = divergences[i];
        jsonu::reject_unknown(entry_json, context, {"canonical_path", "entries", "status"});
        OffspringMatch match;
        match.canonical_path = jsonu::req_string(entry_json, context, "canonical_path");
        const std::string status = jsonu::req_string(entry_json, context, "status");
        if (status == "Matched") {
            match.status = OffspringMatch::Status::Matched;
        } else if (status == "Missing") {
            match.status = OffspringMatch::Status::Missing;
        } else {
            throw SchemaError(context + ".status", "must be \"Matched\" or \"Missing\"");
        }
        const jsonu::json& entries = jsonu::req_array(entry_json, context, "entries");
        for (std::size_t j = 0; j < entries.size(); ++j) {
            const std::string entry_context = context + ".entries[" + std::to_string(j) + "]";
            jsonu::reject_unknown(entries[j], entry_context, {"env_id", "md5", "size_bytes"});
            OffspringMatch::Entry entry;
            entry.env_id = jsonu::req_string(entries[j], entry_context, "env_id");
            entry.md5 = jsonu::req_string(entries[j], entry_context, "md5");
            if (!is_md5_hex(entry.md5)) {
                throw SchemaError(entry_context + ".md5", "must be 32 lowercase hex characters");
            }
            entry.size_bytes = jsonu::req_uint(entries[j], entry_context, "size_bytes");
            match.entries.push_back(std::move(entry));
        }
        verdict.offspring_divergences.push_back(std::move(match));
    }

    const jsonu::json& deltas = jsonu::req_array(evidence, "verdict.evidence", "activity_deltas");
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        const std::string context = "verdict.evidence.activity_deltas[" + std::to_string(i) + "]";
        const jsonu::json& entry_json = deltas[i];
        jsonu::reject_unknown(entry_json, context, {"kind", "detail", "counts"});
        ActivityDelta delta;
        delta.kind = jsonu::req_string(entry_json, context, "kind");
        delta.detail = jsonu::req_string(entry_json, context, "detail");
        const jsonu::json& counts = jsonu::req_object(entry_json, context, "counts");
        for (const auto& [env_id, count] : counts.items()) {
            if (!count.is_number_unsigned()) {
                throw SchemaError(context + ".counts." + env_id, "must be a non-negative integer");
            }
            delta.counts_by_env[env_id] = count.get<std::uint64_t>();
        }
        verdict.activity_deltas.push_back(std::move(delta));
    }

    const jsonu::json& report_ids = jsonu::req_array(root, "verdict", "report_ids");
    for (std::size_t i = 0; i < report_ids.size(); ++i) {
        if (!report_ids[i].is_string()) {
            throw SchemaError("verdict.report_ids[" + std::to_string(i) + "]", "must be a string");
        }
        verdict.report_ids.push_back(report_ids[i].get<std::string>());
    }
    return verdict;
}

}  // namespace avmas
