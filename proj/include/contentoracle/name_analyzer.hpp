#ifndef CONTENTORACLE_NAME_ANALYZER_HPP
#define CONTENTORACLE_NAME_ANALYZER_HPP

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "contentoracle/unicode.hpp"

namespace contentoracle
{

enum class NameAnomaly
{
    DoubleExtension,
    MissingExtension,
    BidiOverride,
    MixedScriptExtension,
    TrailingWhitespace,
};

inline std::string_view to_string(NameAnomaly a)
{
    switch (a) {
    case NameAnomaly::DoubleExtension: return "DoubleExtension";
    case NameAnomaly::MissingExtension: return "MissingExtension";
    case NameAnomaly::BidiOverride: return "BidiOverride";
    case NameAnomaly::MixedScriptExtension: return "MixedScriptExtension";
    case NameAnomaly::TrailingWhitespace: return "TrailingWhitespace";
    }
    return "?";
}

struct NameReport
{
    /// NFC form of the input.
    std::string normalized_name;
    /// What a bidi-aware renderer shows; equals normalized_name unless
    /// directional controls are present.
    std::string display_name;
    std::optional<std::string> logical_extension;
    std::vector<std::string> extension_chain;
    std::set<NameAnomaly> anomalies;

    bool has(NameAnomaly a) const { return anomalies.contains(a); }

    friend bool operator==(const NameReport&, const NameReport&) = default;
};

inline constexpr std::size_t kMaxExtensionLength = 10;

/// A suffix counts as an extension when, after folding, it is 1..10
/// characters of [a-z0-9].
inline bool is_extension_shaped(std::string_view folded)
{
    return !folded.empty() && folded.size() <= kMaxExtensionLength &&
           std::all_of(folded.begin(), folded.end(), [](char c) {
               return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
           });
}

namespace detail
{

inline std::string strip_trailing_whitespace(std::string_view s, bool& stripped)
{
    auto cps = unicode::code_points(s);
    stripped = false;
    while (!cps.empty() && unicode::is_whitespace(cps.back())) {
        cps.pop_back();
        stripped = true;
    }
    std::string out;
    for (char32_t cp : cps) {
        out += unicode::encode(cp);
    }
    return out;
}

} // namespace detail

/// Filename-level anomaly detection. Extensions are computed on the NFC form
/// with trailing whitespace removed; `known_extensions` holds folded
/// extensions without the leading dot.
inline NameReport analyze_name(std::string_view filename,
                               const std::set<std::string, std::less<>>& known_extensions)
{
    NameReport report;
    report.normalized_name = unicode::nfc(filename);

    const auto cps = unicode::code_points(report.normalized_name);
    const bool has_bidi = std::any_of(cps.begin(), cps.end(), unicode::is_bidi_control);
    if (has_bidi) {
        report.anomalies.insert(NameAnomaly::BidiOverride);
        report.display_name = unicode::visual_order(report.normalized_name);
    } else {
        report.display_name = report.normalized_name;
    }

    bool trailing = false;
    const std::string base =
        detail::strip_trailing_whitespace(report.normalized_name, trailing);
    if (trailing) {
        report.anomalies.insert(NameAnomaly::TrailingWhitespace);
    }

    // Suffixes after the stem. Leading dots belong to the stem, so ".bashrc"
    // has none.
    std::vector<std::string_view> suffixes;
    if (const auto lead = base.find_first_not_of('.'); lead != std::string::npos) {
        std::string_view rest = std::string_view(base).substr(lead);
        for (auto dot = rest.find('.'); dot != std::string_view::npos;) {
            rest.remove_prefix(dot + 1);
            dot = rest.find('.');
            suffixes.push_back(rest.substr(0, dot));
        }
    }

    // The chain is the trailing run of extension-shaped suffixes.
    std::vector<std::string> chain;
    for (auto it = suffixes.rbegin(); it != suffixes.rend(); ++it) {
        std::string folded = unicode::fold(*it);
        if (!is_extension_shaped(folded)) {
            break;
        }
        chain.push_back(std::move(folded));
    }
    std::reverse(chain.begin(), chain.end());
    report.extension_chain = chain;

    if (!chain.empty()) {
        report.logical_extension = chain.back();
    } else {
        report.anomalies.insert(NameAnomaly::MissingExtension);
    }

    if (!suffixes.empty() && unicode::scripts_of(suffixes.back()).size() >= 2) {
        report.anomalies.insert(NameAnomaly::MixedScriptExtension);
    }

    if (chain.size() >= 2 &&
        known_extensions.contains(chain[chain.size() - 1]) &&
        known_extensions.contains(chain[chain.size() - 2])) {
        report.anomalies.insert(NameAnomaly::DoubleExtension);
    }
    return report;
}

} // namespace contentoracle

#endif // CONTENTORACLE_NAME_ANALYZER_HPP
