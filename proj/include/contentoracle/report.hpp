#ifndef CONTENTORACLE_REPORT_HPP
#define CONTENTORACLE_REPORT_HPP

// JSON report documents. nlohmann::json objects keep keys sorted, so dump()
// is already canonical; every document carries "v":1.

#include <optional>
#include <string>

#include "contentoracle/browser_model.hpp"
#include "contentoracle/ingest.hpp"
#include "contentoracle/pipeline.hpp"
#include "json.hpp"

namespace contentoracle
{

using nlohmann::json;

inline json optional_json(const std::optional<std::string>& s)
{
    return s ? json(*s) : json(nullptr);
}

inline json optional_json(const std::optional<MimeType>& m)
{
    return m ? json(m->essence()) : json(nullptr);
}

inline json to_json(const NameReport& r)
{
    json anomalies = json::array();
    for (const auto a : r.anomalies) {
        anomalies.push_back(to_string(a));
    }
    return {{"anomalies", anomalies},
            {"display_name", r.display_name},
            {"extension_chain", r.extension_chain},
            {"logical_extension", optional_json(r.logical_extension)},
            {"normalized_name", r.normalized_name}};
}

inline json to_json(const SniffReport& r)
{
    json candidates = json::array();
    for (const auto& c : r.candidates) {
        candidates.push_back({{"mime", c.mime.essence()},
                              {"offset", c.offset},
                              {"signature", c.signature},
                              {"weight", c.weight}});
    }
    return {{"bytes_examined", r.bytes_examined},
            {"candidates", candidates},
            {"is_polyglot", r.is_polyglot},
            {"text_fallback", to_string(r.text_fallback)}};
}

inline json to_json(const std::vector<ViewState>& views)
{
    json out = json::array();
    for (const auto& state : views) {
        json j = to_json(state.view);
        j["stale"] = state.stale;
        out.push_back(std::move(j));
    }
    return out;
}

inline json to_json(const Provenance& p)
{
    return {{"origin_url", optional_json(p.origin_url)},
            {"quarantine", optional_json(p.quarantine)},
            {"referrer_url", optional_json(p.referrer_url)}};
}

inline json to_json(const Discrepancy& d)
{
    json detail = json::object();
    for (const auto& [key, value] : d.detail) {
        detail[key] = value;
    }
    return {{"detail", detail}, {"kind", to_string(d.kind)}, {"severity", to_string(d.severity)}};
}

inline json to_json(const CapturedHeaders& h)
{
    return {{"content_disposition", optional_json(h.content_disposition)},
            {"content_type", optional_json(h.content_type)},
            {"x_content_type_options", optional_json(h.x_content_type_options)}};
}

/// The `identify` document: what each source says, no judgment.
inline json identify_report(const fs::path& path, const Evidence& e, std::int64_t now)
{
    return {{"v", 1},
            {"generated_at", now},
            {"path", path.string()},
            {"name_report", to_json(e.name_report)},
            {"extension_mime", optional_json(e.extension_mime)},
            {"declared_mime", optional_json(e.declared_mime)},
            {"sniff", to_json(e.sniff)},
            {"views", to_json(e.views)},
            {"provenance", to_json(e.provenance)}};
}

/// The `check` document: identify plus discrepancies and verdict.
inline json check_report(const fs::path& path, const Assessment& a, std::int64_t now)
{
    json j = identify_report(path, a.evidence, now);
    json discrepancies = json::array();
    for (const auto& d : a.report.discrepancies) {
        discrepancies.push_back(to_json(d));
    }
    j["discrepancies"] = discrepancies;
    j["consistent"] = a.report.consistent;
    j["resolved_mime"] = optional_json(a.report.resolved_mime);
    j["resolved_active"] = a.report.resolved_active;
    j["resolved_source"] = a.report.resolved_source.empty() ? json(nullptr)
                                                            : json(a.report.resolved_source);
    j["trust"] = to_string(a.trust);
    j["verdict"] = to_string(a.decision.verdict);
    j["reasons"] = a.decision.reasons;
    j["exit_code"] = exit_code(a.decision.verdict);
    return j;
}

/// The `fetch` document: the check report plus what came over the wire.
inline json fetch_report(const FetchRecord& record, const Assessment& a, std::int64_t now)
{
    json j = check_report(record.body_path, a, now);
    j["url"] = record.url;
    j["status"] = record.status;
    j["headers"] = to_json(record.headers);
    j["fetched_at"] = record.fetched_at;
    j["name_notes"] = record.name_notes;
    j["nosniff"] = nosniff_requested(record.headers);
    return j;
}

inline json divergence_report(const DecisionTree& a, const DecisionTree& b,
                              const std::vector<RequestContext>& grid,
                              const std::vector<Divergence>& divergences)
{
    json items = json::array();
    for (const auto& d : divergences) {
        items.push_back({{"context", to_json(d.context)},
                         {"a", to_string(d.a)},
                         {"b", to_string(d.b)}});
    }
    return {{"v", 1},
            {"a", a.name()},
            {"b", b.name()},
            {"basis", "model-derived"},
            {"grid_size", grid.size()},
            {"divergent", divergences.size()},
            {"divergences", items}};
}

/// Compact, sorted-key serialization used for every document.
inline std::string dump(const json& j)
{
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

} // namespace contentoracle

#endif // CONTENTORACLE_REPORT_HPP
