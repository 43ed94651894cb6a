#pragma once

// The isolated virtual "PC": a deterministic in-process filesystem, registry,
// process table, and clock, parameterized by an environment profile. Nothing
// here touches the host system; the entire environment evolution is a pure
// function of (profile, operations applied).

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "avmas/errors.hpp"
#include "avmas/json_util.hpp"
#include "avmas/prng.hpp"

namespace avmas {

// ---------------------------------------------------------------------------
// Virtual paths

/// True iff `path` is absolute and normalized: starts with '/', uses single
/// '/' separators, contains no "." or ".." segments, and has no trailing
/// slash (the root "/" itself is allowed).
inline bool is_normalized_absolute(std::string_view path) {
    if (path.empty() || path.front() != '/') {
        return false;
    }
    if (path == "/") {
        return true;
    }
    if (path.back() == '/') {
        return false;
    }
    std::size_t segment_start = 1;
    for (std::size_t i = 1; i <= path.size(); ++i) {
        if (i == path.size() || path[i] == '/') {
            const std::string_view segment = path.substr(segment_start, i - segment_start);
            if (segment.empty() || segment == "." || segment == "..") {
                return false;
            }
            segment_start = i + 1;
        }
    }
    return true;
}

/// Executable-class iff the path ends in .exe, .scr, .com, or .dll
/// (case-insensitive). Offspring are exactly the executable-class files a
/// specimen creates.
inline bool is_executable_path(std::string_view path) {
    const auto dot = path.rfind('.');
    if (dot == std::string_view::npos) {
        return false;
    }
    std::string ext(path.substr(dot));
    for (char& c : ext) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return ext == ".exe" || ext == ".scr" || ext == ".com" || ext == ".dll";
}

// ---------------------------------------------------------------------------
// Environment profile

/// The parameter set that differentiates one virtual PC from another.
struct EnvProfile {
    std::string env_id;
    std::string hostname;
    std::string username;
    std::string sysroot;          // absolute virtual path
    std::uint64_t rng_seed = 0;
    std::uint64_t start_time = 0; // virtual seconds

    friend bool operator==(const EnvProfile&, const EnvProfile&) = default;
};

/// Throws ValidationError naming the offending field.
inline void validate_profile(const EnvProfile& profile) {
    if (profile.env_id.empty()) {
        throw ValidationError("env_id", "must be non-empty");
    }
    const auto check_value = [](const char* field, const std::string& value) {
        if (value.empty()) {
            throw ValidationError(field, "must be non-empty");
        }
        if (value.find('%') != std::string::npos || value.find('/') != std::string::npos) {
            throw ValidationError(field, "must not contain '%' or '/'");
        }
    };
    check_value("hostname", profile.hostname);
    check_value("username", profile.username);
    if (!is_normalized_absolute(profile.sysroot) || profile.sysroot == "/") {
        throw ValidationError("sysroot", "must be a normalized absolute virtual path below /");
    }
    if (profile.sysroot.find('%') != std::string::npos) {
        throw ValidationError("sysroot", "must not contain '%'");
    }
}

inline jsonu::json profile_to_json(const EnvProfile& profile) {
    return jsonu::json{{"env_id", profile.env_id},     {"hostname", profile.hostname},
                       {"username", profile.username}, {"sysroot", profile.sysroot},
                       {"rng_seed", profile.rng_seed}, {"start_time", profile.start_time}};
}

/// Strict: exactly the declared fields, unknown fields rejected. start_time
/// is optional and defaults to 0.
inline EnvProfile profile_from_json(const jsonu::json& value, const std::string& context = "profile") {
    jsonu::reject_unknown(value, context,
                          {"env_id", "hostname", "username", "sysroot", "rng_seed", "start_time"});
    EnvProfile profile;
    profile.env_id = jsonu::req_string(value, context, "env_id");
    profile.hostname = jsonu::req_string(value, context, "hostname");
    profile.username = jsonu::req_string(value, context, "username");
    profile.sysroot = jsonu::req_string(value, context, "sysroot");
    profile.rng_seed = jsonu::req_uint(value, context, "rng_seed");
    profile.start_time = value.contains("start_time") ? jsonu::req_uint(value, context, "start_time") : 0;
    validate_profile(profile);
    return profile;
}

inline EnvProfile load_profile_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw SchemaError("profile", "cannot open profile file: " + file.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return profile_from_json(jsonu::parse_text(text, "profile"), "profile");
}

// ---------------------------------------------------------------------------
// Path templates
//
// Offspring written at host-specific locations are matched across
// environments through templates whose placeholders name the profile fields:
// %SYSROOT%, %USER%, %HOST%.

inline constexpr std::string_view kPlaceholderSysroot = "%SYSROOT%";
inline constexpr std::string_view kPlaceholderUser = "%USER%";
inline constexpr std::string_view kPlaceholderHost = "%HOST%";

/// Substitutes profile values for placeholders. A '%' that does not start a
/// declared placeholder is a validation error.
inline std::string expand_path(const EnvProfile& profile, std::string_view path_template) {
    std::string out;
    out.reserve(path_template.size());
    std::size_t i = 0;
    while (i < path_template.size()) {
        if (path_template[i] != '%') {
            out += path_template[i];
            ++i;
            continue;
        }
        const auto end = path_template.find('%', i + 1);
        if (end == std::string_view::npos) {
            throw ValidationError("template", "unterminated placeholder in \"" +
                                                  std::string(path_template) + "\"");
        }
        const std::string_view token = path_template.substr(i, end - i + 1);
        if (token == kPlaceholderSysroot) {
            out += profile.sysroot;
        } else if (token == kPlaceholderUser) {
            out += profile.username;
        } else if (token == kPlaceholderHost) {
            out += profile.hostname;
        } else {
            throw ValidationError("template", "unknown placeholder " + std::string(token));
        }
        i = end + 1;
    }
    return out;
}

/// Left inverse of expand_path on paths it produced: substitutes profile
/// values back to placeholders, longest match first at each position.
inline std::string canonicalize_path(const EnvProfile& profile, std::string_view path) {
    struct Replacement {
        std::string_view value;
        std::string_view placeholder;
    };
    Replacement replacements[] = {{profile.sysroot, kPlaceholderSysroot},
                                  {profile.username, kPlaceholderUser},
                                  {profile.hostname, kPlaceholderHost}};
    // Longest value wins at each position; ties resolve in the fixed order
    // sysroot, user, host.
    std::stable_sort(std::begin(replacements), std::end(replacements),
                     [](const Replacement& a, const Replacement& b) {
                         return a.value.size() > b.value.size();
                     });
    std::string out;
    out.reserve(path.size());
    std::size_t i = 0;
    while (i < path.size()) {
        bool replaced = false;
        for (const Replacement& r : replacements) {
            if (!r.value.empty() && path.compare(i, r.value.size(), r.value) == 0) {
                out += r.placeholder;
                i += r.value.size();
                replaced = true;
                break;
            }
        }
        if (!replaced) {
            out += path[i];
            ++i;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Environment state

struct FileNode {
    std::string path;             // absolute virtual path
    std::string content;          // raw bytes
    std::uint64_t created_at_ms = 0;
    std::uint64_t modified_at_ms = 0;

    bool executable_class() const { return is_executable_path(path); }

    friend bool operator==(const FileNode&, const FileNode&) = default;
};

struct ProcessEntry {
    std::uint32_t pid = 0;
    std::string name;
    std::optional<std::uint32_t> parent_pid;
    std::uint64_t spawned_at_ms = 0;
    std::optional<std::uint64_t> exited_at_ms;

    friend bool operator==(const ProcessEntry&, const ProcessEntry&) = default;
};

/// Per-kind counts of recorded environment mutations; lets tests check that
/// no mutation escapes the monitor's event capture.
struct MutationCounters {
    std::uint64_t file_create = 0;
    std::uint64_t file_modify = 0;
    std::uint64_t file_delete = 0;
    std::uint64_t reg_set = 0;
    std::uint64_t reg_delete = 0;  // includes recorded no-op deletes
    std::uint64_t proc_spawn = 0;
    std::uint64_t proc_exit = 0;

    friend bool operator==(const MutationCounters&, const MutationCounters&) = default;
};

/// One virtual PC. Single-owner, single-threaded; distinct environments are
/// fully independent and may run in parallel.
class VirtualEnvironment {
public:
    struct WriteResult {
        bool created = false;  // false: replaced an existing node
    };

    explicit VirtualEnvironment(EnvProfile profile)
        : profile_(std::move(profile)),
          clock_ms_(profile_.start_time * 1000),
          rng_(profile_.rng_seed) {
        validate_profile(profile_);
        directories_.insert(profile_.sysroot);
        processes_.push_back(ProcessEntry{1, "init-analog", std::nullopt, clock_ms_, std::nullopt});
    }

    const EnvProfile& profile() const { return profile_; }
    std::uint64_t clock_ms() const { return clock_ms_; }
    SplitMix64& rng() { return rng_; }
    const std::map<std::string, FileNode>& files() const { return fs_; }
    const std::set<std::string>& directories() const { return directories_; }
    const std::map<std::string, std::string>& registry() const { return registry_; }
    const std::vector<ProcessEntry>& processes() const { return processes_; }
    const MutationCounters& counters() const { return counters_; }

    WriteResult fs_write(std::string_view path, std::string_view content) {
        require_path(path);
        auto it = fs_.find(std::string(path));
        if (it == fs_.end()) {
            FileNode node;
            node.path = std::string(path);
            node.content = std::string(content);
            node.created_at_ms = clock_ms_;
            node.modified_at_ms = clock_ms_;
            fs_.emplace(node.path, std::move(node));
            ++counters_.file_create;
            return {true};
        }
        it->second.content = std::string(content);
        it->second.modified_at_ms = clock_ms_;
        ++counters_.file_modify;
        return {false};
    }

    const std::string& fs_read(std::string_view path) const {
        require_path(path);
        auto it = fs_.find(std::string(path));
        if (it == fs_.end()) {
            throw NotFoundError("no such file: " + std::string(path));
        }
        return it->second.content;
    }

    void fs_delete(std::string_view path) {
        require_path(path);
        auto it = fs_.find(std::string(path));
        if (it == fs_.end()) {
            throw NotFoundError("no such file: " + std::string(path));
        }
        fs_.erase(it);
        ++counters_.file_delete;
    }

    void reg_set(std::string_view key, std::string_view value) {
        require_key(key);
        registry_[std::string(key)] = std::string(value);
        ++counters_.reg_set;
    }

    /// Deleting a missing key is a recorded no-op, not an error; returns
    /// whether the key existed.
    bool reg_delete(std::string_view key) {
        require_key(key);
        ++counters_.reg_delete;
        return registry_.erase(std::string(key)) > 0;
    }

    /// Allocates pids sequentially starting at 2 (pid 1 is the root process).
    std::uint32_t proc_spawn(std::string_view name) {
        const std::uint32_t pid = next_pid_++;
        processes_.push_back(ProcessEntry{pid, std::string(name), 1, clock_ms_, std::nullopt});
        ++counters_.proc_spawn;
        return pid;
    }

    void proc_exit(std::uint32_t pid) {
        for (ProcessEntry& proc : processes_) {
            if (proc.pid == pid) {
                if (proc.exited_at_ms.has_value()) {
                    throw StateError("process already exited: pid " + std::to_string(pid));
                }
                proc.exited_at_ms = clock_ms_;
                ++counters_.proc_exit;
                return;
            }
        }
        throw StateError("no such process: pid " + std::to_string(pid));
    }

    void advance_clock_ms(std::uint64_t millis) { clock_ms_ += millis; }

    friend bool operator==(const VirtualEnvironment& a, const VirtualEnvironment& b) {
        return a.profile_ == b.profile_ && a.fs_ == b.fs_ && a.directories_ == b.directories_ &&
               a.registry_ == b.registry_ && a.processes_ == b.processes_ &&
               a.clock_ms_ == b.clock_ms_ && a.rng_ == b.rng_ && a.next_pid_ == b.next_pid_;
    }

private:
    static void require_path(std::string_view path) {
        if (!is_normalized_absolute(path)) {
            throw ValidationError("path", "not a normalized absolute virtual path: \"" +
                                              std::string(path) + "\"");
        }
    }

    static void require_key(std::string_view key) {
        if (key.empty()) {
            throw ValidationError("key", "registry key must be non-empty");
        }
    }

    EnvProfile profile_;
    std::map<std::string, FileNode> fs_;
    std::set<std::string> directories_;
    std::map<std::string, std::string> registry_;
    std::vector<ProcessEntry> processes_;
    std::uint64_t clock_ms_ = 0;
    SplitMix64 rng_;
    std::uint32_t next_pid_ = 2;
    MutationCounters counters_;
};

inline VirtualEnvironment create_env(EnvProfile profile) {
    return VirtualEnvironment(std::move(profile));
}

}  // namespace avmas
