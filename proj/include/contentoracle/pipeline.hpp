#ifndef CONTENTORACLE_PIPELINE_HPP
#define CONTENTORACLE_PIPELINE_HPP

// Wires the modules together for one local file: databases in, evidence,
// report and verdict out.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <set>
#include <string>

#include "contentoracle/active_registry.hpp"
#include "contentoracle/attribute_store.hpp"
#include "contentoracle/discrepancy.hpp"
#include "contentoracle/mime.hpp"
#include "contentoracle/name_analyzer.hpp"
#include "contentoracle/policy.hpp"
#include "contentoracle/sniffer.hpp"
#include "contentoracle/view_registry.hpp"

namespace contentoracle
{

/// Read-only lookup tables shared by every check.
struct Databases
{
    ExtensionMap extensions;
    SignatureDb signatures;
    ActiveRegistry active;
    std::set<std::string, std::less<>> known_extensions;

    static Databases from(ExtensionMap extensions, SignatureDb signatures, ActiveRegistry active)
    {
        Databases db{std::move(extensions), std::move(signatures), std::move(active), {}};
        for (const auto& [ext, types] : db.extensions.entries()) {
            db.known_extensions.insert(ext);
        }
        return db;
    }
};

inline std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file", path.string());
    }
    std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (in.bad()) {
        throw IoError("read failed", path.string());
    }
    return data;
}

/// Loads mime.types, the signature DB and the active set from disk.
inline Databases load_databases(const fs::path& mime_types, const fs::path& signatures,
                                const fs::path& active_types)
{
    auto map = load_extension_map(read_file(mime_types));
    return Databases::from(std::move(map.map), load_signatures(read_file(signatures)),
                           load_active_set(read_file(active_types)));
}

/// How the declared type and sniffing apply to one check.
struct EvidenceOptions
{
    std::optional<MimeType> declared_mime;
    /// Suppresses the sniff contribution, as X-Content-Type-Options does.
    bool nosniff = false;
};

inline Evidence gather_evidence(const fs::path& path, const Databases& db,
                                const AttributeStore& store, const EvidenceOptions& options = {})
{
    detail::require_file(path);
    Evidence e;
    e.name_report = analyze_name(path.filename().string(), db.known_extensions);
    if (e.name_report.logical_extension) {
        e.extension_mime = db.extensions.primary(*e.name_report.logical_extension);
    }
    if (!options.nosniff) {
        e.sniff = sniff(read_file(path), db.signatures);
    }
    e.declared_mime = options.declared_mime;
    e.views = read_views(store, path);
    e.provenance = read_provenance(store, path);
    return e;
}

/// Evidence, findings and verdict for one file.
struct Assessment
{
    Evidence evidence;
    DiscrepancyReport report;
    TrustState trust = TrustState::Unset;
    HandlerPolicy policy;
    PolicyDecision decision;
};

inline Assessment check_file(const fs::path& path, const Databases& db, const AttributeStore& store,
                             const EvidenceOptions& options = {},
                             const std::optional<std::string>& handler = std::nullopt)
{
    Assessment a;
    a.evidence = gather_evidence(path, db, store, options);
    a.report = evaluate(a.evidence, db.active);
    a.trust = get_trust(store, path);
    a.policy = get_allowed_handlers(store, path);
    a.decision = decide(a.report, a.trust, handler, a.policy);
    return a;
}

} // namespace contentoracle

#endif // CONTENTORACLE_PIPELINE_HPP
