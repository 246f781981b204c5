#ifndef CONTENTORACLE_DISCREPANCY_HPP
#define CONTENTORACLE_DISCREPANCY_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "contentoracle/active_registry.hpp"
#include "contentoracle/mime.hpp"
#include "contentoracle/name_analyzer.hpp"
#include "contentoracle/sniffer.hpp"
#include "contentoracle/view_registry.hpp"

namespace contentoracle
{

enum class DiscrepancyKind
{
    ExtensionSniffMismatch,
    DeclaredSniffMismatch,
    ViewDivergence,
    StaleView,
    Polyglot,
    NameAnomaly,
    ActivityFlip,
};

inline std::string_view to_string(DiscrepancyKind k)
{
    switch (k) {
    case DiscrepancyKind::ExtensionSniffMismatch: return "ExtensionSniffMismatch";
    case DiscrepancyKind::DeclaredSniffMismatch: return "DeclaredSniffMismatch";
    case DiscrepancyKind::ViewDivergence: return "ViewDivergence";
    case DiscrepancyKind::StaleView: return "StaleView";
    case DiscrepancyKind::Polyglot: return "Polyglot";
    case DiscrepancyKind::NameAnomaly: return "NameAnomaly";
    case DiscrepancyKind::ActivityFlip: return "ActivityFlip";
    }
    return "?";
}

enum class Severity
{
    Info = 1,
    Warning = 2,
    Critical = 3,
};

inline std::string_view to_string(Severity s)
{
    switch (s) {
    case Severity::Info: return "Info";
    case Severity::Warning: return "Warning";
    case Severity::Critical: return "Critical";
    }
    return "?";
}

/// Detail is an ordered list of (field, value) pairs naming the sources.
using Detail = std::vector<std::pair<std::string, std::string>>;

struct Discrepancy
{
    DiscrepancyKind kind;
    Severity severity;
    Detail detail;

    friend bool operator==(const Discrepancy&, const Discrepancy&) = default;
};

/// Everything known about one file.
struct Evidence
{
    std::optional<MimeType> extension_mime;
    SniffReport sniff;
    std::optional<MimeType> declared_mime;
    std::vector<ViewState> views;
    NameReport name_report;
    Provenance provenance;
};

struct DiscrepancyReport
{
    std::vector<Discrepancy> discrepancies;
    std::optional<MimeType> resolved_mime;
    bool resolved_active = false;
    /// Which source supplied resolved_mime: sniff, declared, extension, views.
    std::string resolved_source;
    bool consistent = true;

    std::optional<Severity> max_severity() const
    {
        std::optional<Severity> max;
        for (const auto& d : discrepancies) {
            if (!max || d.severity > *max) {
                max = d.severity;
            }
        }
        return max;
    }

    bool contains(DiscrepancyKind kind) const
    {
        return std::any_of(discrepancies.begin(), discrepancies.end(),
                           [kind](const Discrepancy& d) { return d.kind == kind; });
    }

    friend bool operator==(const DiscrepancyReport&, const DiscrepancyReport&) = default;
};

/// Severity of a disagreement between two sources: both inactive is Info,
/// both active is Warning, exactly one active is Critical.
inline Severity pair_severity(bool a_active, bool b_active)
{
    if (a_active != b_active) {
        return Severity::Critical;
    }
    return a_active ? Severity::Warning : Severity::Info;
}

struct Resolution
{
    std::optional<MimeType> mime;
    bool active = false;
    std::string source;
};

/// Single best type. Content bytes are the hardest source to forge, so the
/// order is: top sniff candidate, declared type, extension, then the
/// majority of fresh views (ties go to the smallest essence).
inline Resolution resolve_mime(const Evidence& e, const ActiveRegistry& active)
{
    auto bare = [](const MimeType& m) { return MimeType{m.family, m.subtype, {}}; };
    if (const auto* top = e.sniff.top()) {
        return {bare(top->mime), active.is_active(top->mime), "sniff"};
    }
    if (e.declared_mime) {
        return {bare(*e.declared_mime), active.is_active(*e.declared_mime), "declared"};
    }
    if (e.extension_mime) {
        return {bare(*e.extension_mime), active.is_active(*e.extension_mime), "extension"};
    }
    std::map<std::string, std::pair<std::size_t, const ContentView*>> tally;
    for (const auto& state : e.views) {
        if (state.stale) {
            continue;
        }
        auto& [count, first] = tally[state.view.mime.essence()];
        if (count++ == 0) {
            first = &state.view;
        }
    }
    const ContentView* winner = nullptr;
    std::size_t best = 0;
    for (const auto& [essence, entry] : tally) {
        if (entry.first > best) {
            best = entry.first;
            winner = entry.second;
        }
    }
    if (!winner) {
        return {};
    }
    // The views' own activity judgment, not the registry's, so that a view
    // agreeing with the resolution always agrees on activity too.
    bool resolved_active = false;
    for (const auto& state : e.views) {
        if (!state.stale && state.view.mime.same_essence(winner->mime) && state.view.active) {
            resolved_active = true;
        }
    }
    return {bare(winner->mime), resolved_active, "views"};
}

namespace detail
{

inline bool discrepancy_before(const Discrepancy& a, const Discrepancy& b)
{
    if (a.severity != b.severity) {
        return a.severity > b.severity;
    }
    if (a.kind != b.kind) {
        return a.kind < b.kind;
    }
    return a.detail < b.detail;
}

inline std::string join(const std::vector<std::string>& items)
{
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) {
            out += ',';
        }
        out += s;
    }
    return out;
}

} // namespace detail

/// Cross-checks every evidence source. Absent sources never produce a
/// mismatch; media types are compared on family/subtype only.
inline DiscrepancyReport evaluate(const Evidence& e, const ActiveRegistry& active)
{
    DiscrepancyReport report;
    std::vector<Discrepancy>& out = report.discrepancies;

    const Resolution resolved = resolve_mime(e, active);
    report.resolved_mime = resolved.mime;
    report.resolved_active = resolved.active;
    report.resolved_source = resolved.source;

    const SniffCandidate* top = e.sniff.top();

    if (e.extension_mime && top && !e.extension_mime->same_essence(top->mime)) {
        out.push_back({DiscrepancyKind::ExtensionSniffMismatch,
                       pair_severity(active.is_active(*e.extension_mime), active.is_active(top->mime)),
                       {{"extension", e.extension_mime->essence()}, {"sniff", top->mime.essence()}}});
    }
    if (e.declared_mime && top && !e.declared_mime->same_essence(top->mime)) {
        out.push_back({DiscrepancyKind::DeclaredSniffMismatch,
                       pair_severity(active.is_active(*e.declared_mime), active.is_active(top->mime)),
                       {{"declared", e.declared_mime->essence()}, {"sniff", top->mime.essence()}}});
    }

    for (const auto& state : e.views) {
        const auto& v = state.view;
        if (state.stale) {
            out.push_back({DiscrepancyKind::StaleView, Severity::Warning,
                           {{"app", v.app_id}, {"recorded_hash", to_hex(v.content_hash)}}});
            continue;
        }
        if (resolved.mime &&
            (!v.mime.same_essence(*resolved.mime) || v.active != resolved.active)) {
            out.push_back({DiscrepancyKind::ViewDivergence,
                           pair_severity(v.active, resolved.active),
                           {{"app", v.app_id},
                            {"view", v.mime.essence() + (v.active ? " (active)" : " (inactive)")},
                            {"resolved", resolved.mime->essence() +
                                             (resolved.active ? " (active)" : " (inactive)")}}});
        }
    }

    if (e.sniff.is_polyglot) {
        std::set<std::string> types;
        bool any_active = false;
        for (const auto& c : e.sniff.candidates) {
            types.insert(c.mime.essence());
            any_active = any_active || active.is_active(c.mime);
        }
        out.push_back({DiscrepancyKind::Polyglot,
                       any_active ? Severity::Critical : Severity::Warning,
                       {{"types", detail::join({types.begin(), types.end()})}}});
    }

    for (const auto anomaly : e.name_report.anomalies) {
        Detail d{{"anomaly", std::string(to_string(anomaly))}};
        if (anomaly == NameAnomaly::BidiOverride) {
            d.emplace_back("display_name", e.name_report.display_name);
        }
        out.push_back({DiscrepancyKind::NameAnomaly,
                       anomaly == NameAnomaly::MissingExtension ? Severity::Info : Severity::Warning,
                       std::move(d)});
    }

    // Activity as each source sees it.
    std::vector<std::string> active_sources;
    std::vector<std::string> inactive_sources;
    auto note = [&](std::string label, bool is_active) {
        (is_active ? active_sources : inactive_sources).push_back(std::move(label));
    };
    if (e.extension_mime) {
        note("extension", active.is_active(*e.extension_mime));
    }
    if (top) {
        note("sniff", active.is_active(top->mime));
    }
    if (e.declared_mime) {
        note("declared", active.is_active(*e.declared_mime));
    }
    for (const auto& state : e.views) {
        if (!state.stale) {
            note("view:" + state.view.app_id, state.view.active);
        }
    }
    if (!active_sources.empty() && !inactive_sources.empty()) {
        out.push_back({DiscrepancyKind::ActivityFlip, Severity::Critical,
                       {{"active", detail::join(active_sources)},
                        {"inactive", detail::join(inactive_sources)}}});
    }

    std::sort(out.begin(), out.end(), detail::discrepancy_before);
    report.consistent = out.empty();
    return report;
}

} // namespace contentoracle

#endif // CONTENTORACLE_DISCREPANCY_HPP
