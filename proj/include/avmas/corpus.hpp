#pragma once

// The synthetic 20-specimen corpus: 18 traditional analogs exercising varied
// mixes of file, registry, and process behavior, plus 2 polymorphic analogs
// (one RandBytes engine, one XorKey engine). Names are sanitized analogs;
// behaviors are loose caricatures, not reproductions. Generation is fully
// deterministic - fixed embedded templates, no randomness.

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "avmas/errors.hpp"
#include "avmas/json_util.hpp"
#include "avmas/report.hpp"

namespace avmas {

inline constexpr std::string_view kManifestFileName = "manifest.json";
inline constexpr std::string_view kGroundTruthTraditional = "Traditional";
inline constexpr std::string_view kGroundTruthPolymorphic = "Polymorphic";

struct CorpusEntry {
    std::string specimen_file;
    std::string analog_name;
    std::string ground_truth;  // "Traditional" | "Polymorphic"

    friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

struct CorpusManifest {
    std::vector<CorpusEntry> entries;

    friend bool operator==(const CorpusManifest&, const CorpusManifest&) = default;
};

namespace detail {

struct CorpusTemplate {
    std::string_view analog_name;
    std::string_view ground_truth;
    std::string_view source;
};

inline const std::vector<CorpusTemplate>& corpus_templates() {
    static const std::vector<CorpusTemplate> kTemplates = {
        {"lovesan-analog", kGroundTruthTraditional,
         R"(specimen lovesan-analog payload 0 16
PAYLOAD:BLASTER-CORE-XYZ
regset HKLM\Software\RunOnce-Analog\windowsupdate msblast-analog.exe
replicate %SYSROOT%/msblast-analog.exe mutate none
spawn msblast-analog
sleep 1000
)"},
        {"conficker-analog", kGroundTruthTraditional,
         R"(specimen conficker-analog payload 0 13
PAYLOAD:DOWNADUP-CORE
regset HKLM\Software\Services-Analog\netsvcs rundll-analog
replicate %SYSROOT%/drv/netapi-analog.dll mutate none
spawn svchost-analog
sleep 500
)"},
        {"higuy-analog", kGroundTruthTraditional,
         R"(specimen higuy-analog payload 0 15
PAYLOAD:HIGUY-MAIL-CORE
write %SYSROOT%/u/%USER%/inbox-analog.txt mail from higuy
replicate %SYSROOT%/u/%USER%/higuy-analog.exe mutate none
regset HKCU\Software\Mailer-Analog\higuy 1
)"},
        {"fasong-analog", kGroundTruthPolymorphic,
         R"(specimen fasong-analog payload 0 23
PAYLOAD:HLLW-FASONG-CORE-BYTES!
write %SYSROOT%/shared/readme-analog.txt spreads over open shares
replicate %SYSROOT%/fasong-analog.exe mutate randbytes 6
replicate %SYSROOT%/u/%USER%/fasong-analog.exe mutate randbytes 6
spawn fasong-analog
sleep 250
)"},
        {"lovgate-analog", kGroundTruthTraditional,
         R"(specimen lovgate-analog payload 0 18
PAYLOAD:LOVGATE-REPLY-CORE
replicate %SYSROOT%/lovgate-analog.exe mutate none
replicate %SYSROOT%/shared/lovgate-analog.exe mutate none
regset HKLM\Software\RunOnce-Analog\winhelp lovgate-analog.exe
spawn lovgate-analog
)"},
        {"imaut-analog", kGroundTruthTraditional,
         R"(specimen imaut-analog payload 0 13
PAYLOAD:IMAUT-IM-CORE
write %SYSROOT%/u/%USER%/im-message.txt click this link
replicate %SYSROOT%/imaut-analog.exe mutate none
sleep 750
)"},
        {"klez-analog", kGroundTruthPolymorphic,
         R"(specimen klez-analog payload 0 19
PAYLOAD:KLEZ-MASS-MAIL-CORE
replicate %SYSROOT%/klez-analog.exe mutate xorkey
replicate %SYSROOT%/u/%USER%/klez-analog.exe mutate xorkey
replicate %SYSROOT%/shared/klez-analog.scr mutate xorkey
write %SYSROOT%/u/%USER%/inbox-analog.txt undeliverable mail notice
regset HKCU\Software\Mailer-Analog\flag 1
sleep 500
)"},
        {"kwbot-analog", kGroundTruthTraditional,
         R"(specimen kwbot-analog payload 0 14
PAYLOAD:KWBOT-IRC-CORE
replicate %SYSROOT%/kwbot-analog.exe mutate none
regset HKLM\Software\RunOnce-Analog\kwbot kwbot-analog.exe
spawn kwbot-analog
exitproc last
)"},
        {"mumu-analog", kGroundTruthTraditional,
         R"(specimen mumu-analog payload 0 15
PAYLOAD:MUMU-BATCH-CORE
repeat 3 {
write %SYSROOT%/shared/mumu-note.txt batch copy pass
}
replicate %SYSROOT%/mumu-analog.exe mutate none
)"},
        {"mytob-analog", kGroundTruthTraditional,
         R"(specimen mytob-analog payload 0 14
PAYLOAD:MYTOB-BOT-CORE
regset HKLM\Software\RunOnce-Analog\mytob mytob-analog.exe
replicate %SYSROOT%/mytob-analog.exe mutate none
spawn mytob-analog
sleep 300
)"},
        {"brontok-analog", kGroundTruthTraditional,
         R"(specimen brontok-analog payload 0 16
PAYLOAD:BRONTOK-FDC-CORE
replicate %SYSROOT%/u/%USER%/brontok-analog.exe mutate none
regdel HKCU\Software\Policies-Analog\restrict
write %SYSROOT%/u/%USER%/note-analog.txt removable drive copy
)"},
        {"xema-analog", kGroundTruthTraditional,
         R"(specimen xema-analog payload 0 13
PAYLOAD:XEMA-FDC-CORE
replicate %SYSROOT%/u/%USER%/xema-analog.exe mutate none
write %SYSROOT%/u/%USER%/xema-note.txt autorun stub
)"},
        {"sober-analog", kGroundTruthTraditional,
         R"(specimen sober-analog payload 0 15
PAYLOAD:SOBER-MAIL-CORE
repeat 2 {
write %SYSROOT%/u/%USER%/outbox-analog.txt fake delivery failure
}
replicate %SYSROOT%/sober-analog.exe mutate none
)"},
        {"swen-analog", kGroundTruthTraditional,
         R"(specimen swen-analog payload 0 16
PAYLOAD:SWEN-UPDATE-CORE
write %SYSROOT%/tmp-analog/patch.txt critical update
replicate %SYSROOT%/swen-analog.exe mutate none
delete %SYSROOT%/tmp-analog/patch.txt
regset HKLM\Software\Installer-Analog\swen done
)"},
        {"xorala-analog", kGroundTruthTraditional,
         R"(specimen xorala-analog payload 0 18
PAYLOAD:XORALA-INFECT-CORE
replicate %SYSROOT%/xorala-analog.exe mutate none
replicate %SYSROOT%/drv/xorala-analog.com mutate none
)"},
        {"virut-analog", kGroundTruthTraditional,
         R"(specimen virut-analog payload 0 17
PAYLOAD:VIRUT-IRCBOT-CORE
replicate %SYSROOT%/virut-analog.exe mutate none
spawn virut-analog
regset HKLM\Software\Firewall-Analog\bypass on
)"},
        {"wullik-analog", kGroundTruthTraditional,
         R"(specimen wullik-analog payload 0 16
PAYLOAD:WULLIK-MAIL-CORE
replicate %SYSROOT%/u/%USER%/wullik-analog.exe mutate none
write %SYSROOT%/u/%USER%/wullik-note.txt mail attachment copy
)"},
        {"rontokbro-analog", kGroundTruthTraditional,
         R"(specimen rontokbro-analog payload 0 14
PAYLOAD:RONTOKBRO-CORE
replicate %SYSROOT%/u/%USER%/rontokbro-analog.exe mutate none
repeat 2 {
write %SYSROOT%/shared/bro-note.txt folder mimic
}
regset HKCU\Software\Shell-Analog\norun 1
)"},
        {"yahlover-analog", kGroundTruthTraditional,
         R"(specimen yahlover-analog payload 0 16
PAYLOAD:YAHLOVER-IM-CORE
replicate %SYSROOT%/yahlover-analog.exe mutate none
spawn yahlover-analog
sleep 400
write %SYSROOT%/u/%USER%/yahlover-note.txt messenger spam
)"},
        {"orbina-analog", kGroundTruthTraditional,
         R"(specimen orbina-analog payload 0 15
PAYLOAD:ORBINA-RTS-CORE
replicate %SYSROOT%/orbina-analog.exe mutate none
regset HKLM\Software\RunOnce-Analog\orbina orbina-analog.exe
delete %SYSROOT%/tmp-analog/orbina-drop.tmp
write %SYSROOT%/u/%USER%/orbina-note.txt payload note
)"},
    };
    return kTemplates;
}

}  // namespace detail

inline jsonu::json manifest_to_json(const CorpusManifest& manifest) {
    jsonu::json entries = jsonu::json::array();
    for (const CorpusEntry& entry : manifest.entries) {
        entries.push_back(jsonu::json{{"specimen_file", entry.specimen_file},
                                      {"analog_name", entry.analog_name},
                                      {"ground_truth", entry.ground_truth}});
    }
    return jsonu::json{{"entries", entries}};
}

inline std::string serialize_manifest(const CorpusManifest& manifest) {
    return jsonu::canonical_bytes(manifest_to_json(manifest));
}

inline CorpusManifest parse_manifest(std::string_view bytes) {
    const jsonu::json root = jsonu::parse_text(bytes, "manifest");
    jsonu::reject_unknown(root, "manifest", {"entries"});
    CorpusManifest manifest;
    const jsonu::json& entries = jsonu::req_array(root, "manifest", "entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const std::string context = "manifest.entries[" + std::to_string(i) + "]";
        jsonu::reject_unknown(entries[i], context, {"specimen_file", "analog_name", "ground_truth"});
        CorpusEntry entry;
        entry.specimen_file = jsonu::req_string(entries[i], context, "specimen_file");
        entry.analog_name = jsonu::req_string(entries[i], context, "analog_name");
        entry.ground_truth = jsonu::req_string(entries[i], context, "ground_truth");
        if (entry.ground_truth != kGroundTruthTraditional &&
            entry.ground_truth != kGroundTruthPolymorphic) {
            throw SchemaError(context + ".ground_truth",
                              "must be \"Traditional\" or \"Polymorphic\"");
        }
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

inline CorpusManifest load_manifest(const std::filesystem::path& corpus_dir) {
    const std::filesystem::path manifest_path = corpus_dir / kManifestFileName;
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) {
        throw Error("cannot open manifest: " + manifest_path.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_manifest(text);
}

/// Writes the 20 specimen files plus manifest.json into `output_dir`
/// (created if needed) and returns the manifest. Byte-identical on every run.
inline CorpusManifest generate_corpus(const std::filesystem::path& output_dir) {
    std::error_code ec;
    std::filesystem::create_directories(output_dir, ec);
    if (ec) {
        throw Error("cannot create corpus directory " + output_dir.string() + ": " + ec.message());
    }

    CorpusManifest manifest;
    const auto& templates = detail::corpus_templates();
    for (std::size_t i = 0; i < templates.size(); ++i) {
        const auto& tmpl = templates[i];
        const std::string number = (i + 1 < 10 ? "0" : "") + std::to_string(i + 1);
        CorpusEntry entry;
        entry.specimen_file = number + "-" + std::string(tmpl.analog_name) + ".spec";
        entry.analog_name = std::string(tmpl.analog_name);
        entry.ground_truth = std::string(tmpl.ground_truth);
        write_file_bytes(output_dir / entry.specimen_file, tmpl.source);
        manifest.entries.push_back(std::move(entry));
    }
    write_file_bytes(output_dir / kManifestFileName, serialize_manifest(manifest));
    return manifest;
}

}  // namespace avmas
