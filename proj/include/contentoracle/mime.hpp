#ifndef CONTENTORACLE_MIME_HPP
#define CONTENTORACLE_MIME_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "contentoracle/error.hpp"
#include "contentoracle/unicode.hpp"

namespace contentoracle
{

namespace detail
{

inline bool is_token_char(char c)
{
    const auto u = static_cast<unsigned char>(c);
    if (u <= 0x20 || u >= 0x7F) {
        return false;
    }
    switch (c) {
    case '(': case ')': case '<': case '>': case '@': case ',': case ';':
    case ':': case '\\': case '"': case '/': case '[': case ']': case '?':
    case '=': case '{': case '}':
        return false;
    default:
        return true;
    }
}

inline bool is_token(std::string_view s)
{
    return !s.empty() && std::all_of(s.begin(), s.end(), is_token_char);
}

inline std::string ascii_lower(std::string_view s)
{
    std::string out(s);
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

inline std::string_view trim(std::string_view s)
{
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

inline bool iequals(std::string_view a, std::string_view b)
{
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

} // namespace detail

/// A parsed media type. Family and subtype are stored lowercased; parameter
/// names are lowercased, values are kept verbatim.
struct MimeType
{
    std::string family;
    std::string subtype;
    std::vector<std::pair<std::string, std::string>> parameters;

    /// "family/subtype" without parameters.
    std::string essence() const { return family + "/" + subtype; }

    bool same_essence(const MimeType& other) const
    {
        return family == other.family && subtype == other.subtype;
    }

    friend bool operator==(const MimeType& a, const MimeType& b)
    {
        if (!a.same_essence(b) || a.parameters.size() != b.parameters.size()) {
            return false;
        }
        for (std::size_t i = 0; i < a.parameters.size(); ++i) {
            if (!detail::iequals(a.parameters[i].first, b.parameters[i].first) ||
                a.parameters[i].second != b.parameters[i].second) {
                return false;
            }
        }
        return true;
    }
};

inline std::string format(const MimeType& m)
{
    std::string out = m.essence();
    for (const auto& [name, value] : m.parameters) {
        out += "; ";
        out += detail::ascii_lower(name);
        out += '=';
        if (detail::is_token(value)) {
            out += value;
        } else {
            out += '"';
            for (char c : value) {
                if (c == '"' || c == '\\') {
                    out += '\\';
                }
                out += c;
            }
            out += '"';
        }
    }
    return out;
}

namespace detail
{

// Splits "a; b=\"x;y\"; c" on semicolons outside quoted strings.
inline std::vector<std::string_view> split_parameters(std::string_view s)
{
    std::vector<std::string_view> parts;
    bool quoted = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (quoted && s[i] == '\\') {
            ++i;
        } else if (s[i] == '"') {
            quoted = !quoted;
        } else if (!quoted && s[i] == ';') {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    if (quoted) {
        throw MalformedMime("unterminated quoted parameter value");
    }
    parts.push_back(s.substr(start));
    return parts;
}

inline std::string unquote(std::string_view v)
{
    if (v.size() < 2 || v.front() != '"' || v.back() != '"') {
        throw MalformedMime("bad quoted string: " + std::string(v));
    }
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (v[i] == '\\' && i + 2 < v.size()) {
            ++i;
        } else if (v[i] == '"') {
            throw MalformedMime("stray quote in parameter value");
        }
        out += v[i];
    }
    return out;
}

} // namespace detail

/// Parses "family/subtype[; name=value]*". Throws MalformedMime.
inline MimeType parse_mime_type(std::string_view text)
{
    const auto parts = detail::split_parameters(detail::trim(text));
    const std::string_view essence = detail::trim(parts.front());
    const auto slash = essence.find('/');
    if (slash == std::string_view::npos) {
        throw MalformedMime("missing '/' in media type: " + std::string(text));
    }
    const auto family = essence.substr(0, slash);
    const auto subtype = essence.substr(slash + 1);
    if (!detail::is_token(family) || !detail::is_token(subtype)) {
        throw MalformedMime("empty or illegal token in media type: " +
                            std::string(text));
    }

    MimeType m{detail::ascii_lower(family), detail::ascii_lower(subtype), {}};
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto param = detail::trim(parts[i]);
        if (param.empty()) {
            continue;
        }
        const auto eq = param.find('=');
        if (eq == std::string_view::npos) {
            throw MalformedMime("parameter without '=': " + std::string(param));
        }
        const auto name = detail::trim(param.substr(0, eq));
        const auto raw = detail::trim(param.substr(eq + 1));
        if (!detail::is_token(name)) {
            throw MalformedMime("illegal parameter name: " + std::string(name));
        }
        std::string value;
        if (!raw.empty() && raw.front() == '"') {
            value = detail::unquote(raw);
        } else if (detail::is_token(raw)) {
            value = std::string(raw);
        } else {
            throw MalformedMime("illegal parameter value: " + std::string(raw));
        }
        m.parameters.emplace_back(detail::ascii_lower(name), std::move(value));
    }
    return m;
}

inline std::optional<MimeType> try_parse_mime_type(std::string_view text)
{
    try {
        return parse_mime_type(text);
    } catch (const MalformedMime&) {
        return std::nullopt;
    }
}

enum class RegistrationClass
{
    OfficialFamily,
    UnofficialSubtype,
    UnknownFamily,
};

inline constexpr std::array<std::string_view, 9> kIanaFamilies = {
    "application", "audio", "font", "image", "message",
    "model", "multipart", "text", "video",
};

inline bool is_iana_family(std::string_view family)
{
    return std::find(kIanaFamilies.begin(), kIanaFamilies.end(), family) !=
           kIanaFamilies.end();
}

/// Only an "x-" subtype prefix marks a type unofficial; "x." and "vnd." are
/// registered vendor trees.
inline RegistrationClass classify_registration(const MimeType& m)
{
    if (!is_iana_family(m.family)) {
        return RegistrationClass::UnknownFamily;
    }
    if (m.subtype.starts_with("x-")) {
        return RegistrationClass::UnofficialSubtype;
    }
    return RegistrationClass::OfficialFamily;
}

inline std::string_view to_string(RegistrationClass c)
{
    switch (c) {
    case RegistrationClass::OfficialFamily: return "OfficialFamily";
    case RegistrationClass::UnofficialSubtype: return "UnofficialSubtype";
    case RegistrationClass::UnknownFamily: return "UnknownFamily";
    }
    return "?";
}

/// Lookup key for an extension: leading dot dropped, NFC, lowercased.
inline std::string normalize_extension(std::string_view ext)
{
    if (!ext.empty() && ext.front() == '.') {
        ext.remove_prefix(1);
    }
    return unicode::fold(ext);
}

/// Extension to media-type mapping in the style of mime.types. Entries are
/// append-only; the first type listed for an extension is its primary type.
class ExtensionMap
{
public:
    /// Registers `type` and appends it to each extension's list. A type with
    /// no extensions is still recorded as known.
    void add(const MimeType& type, std::span<const std::string> extensions)
    {
        MimeType bare{type.family, type.subtype, {}};
        const std::string key = bare.essence();
        if (!by_type_.contains(key)) {
            by_type_.emplace(key, std::vector<std::string>{});
            types_.push_back(bare);
        }
        auto& reverse = by_type_[key];
        for (const auto& raw : extensions) {
            const std::string ext = normalize_extension(raw);
            if (ext.empty()) {
                continue;
            }
            auto& forward = by_ext_[ext];
            if (std::none_of(forward.begin(), forward.end(),
                             [&](const MimeType& m) { return m.same_essence(bare); })) {
                forward.push_back(bare);
            }
            if (std::find(reverse.begin(), reverse.end(), ext) == reverse.end()) {
                reverse.push_back(ext);
            }
        }
    }

    std::span<const MimeType> lookup(std::string_view extension) const
    {
        const auto it = by_ext_.find(normalize_extension(extension));
        if (it == by_ext_.end()) {
            return {};
        }
        return it->second;
    }

    std::optional<MimeType> primary(std::string_view extension) const
    {
        const auto types = lookup(extension);
        if (types.empty()) {
            return std::nullopt;
        }
        return types.front();
    }

    std::span<const std::string> extensions_of(const MimeType& type) const
    {
        const auto it = by_type_.find(type.essence());
        if (it == by_type_.end()) {
            return {};
        }
        return it->second;
    }

    /// Distinct types in order of first appearance.
    const std::vector<MimeType>& types() const noexcept { return types_; }

    const std::map<std::string, std::vector<MimeType>>& entries() const noexcept
    {
        return by_ext_;
    }

    bool empty() const noexcept { return types_.empty(); }

private:
    std::map<std::string, std::vector<MimeType>> by_ext_;
    std::map<std::string, std::vector<std::string>> by_type_;
    std::vector<MimeType> types_;
};

struct ExtensionMapLoad
{
    ExtensionMap map;
    std::vector<LineError> errors;
};

/// Reads mime.types format: '#' comments, blank lines ignored, whitespace
/// separated fields, type first. Malformed lines are skipped and reported.
inline ExtensionMapLoad load_extension_map(std::istream& in)
{
    ExtensionMapLoad result;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        const std::string_view content =
            detail::trim(std::string_view(line).substr(0, hash));
        if (content.empty()) {
            continue;
        }
        std::istringstream fields{std::string(content)};
        std::string type_field;
        fields >> type_field;
        const auto type = try_parse_mime_type(type_field);
        if (!type || !type->parameters.empty()) {
            result.errors.emplace_back(number, "malformed media type '" + type_field + "'");
            continue;
        }
        std::vector<std::string> extensions;
        for (std::string ext; fields >> ext;) {
            extensions.push_back(std::move(ext));
        }
        result.map.add(*type, extensions);
    }
    return result;
}

inline ExtensionMapLoad load_extension_map(std::string_view text)
{
    std::istringstream in{std::string(text)};
    return load_extension_map(in);
}

struct FamilyCounts
{
    std::size_t official = 0;
    std::size_t unofficial_subtype = 0;
    std::size_t unknown_family = 0;

    std::size_t total() const noexcept
    {
        return official + unofficial_subtype + unknown_family;
    }

    friend bool operator==(const FamilyCounts&, const FamilyCounts&) = default;
};

/// Per-family registration counts over the distinct types in `map`.
inline std::map<std::string, FamilyCounts> db_stats(const ExtensionMap& map)
{
    std::map<std::string, FamilyCounts> stats;
    for (const auto& type : map.types()) {
        auto& counts = stats[type.family];
        switch (classify_registration(type)) {
        case RegistrationClass::OfficialFamily: ++counts.official; break;
        case RegistrationClass::UnofficialSubtype: ++counts.unofficial_subtype; break;
        case RegistrationClass::UnknownFamily: ++counts.unknown_family; break;
        }
    }
    return stats;
}

/// Which applications handle which types. Value type: registration returns
/// a new registry and never mutates a shared one.
class HandlerRegistry
{
public:
    std::span<const std::string> handlers(const MimeType& type) const
    {
        const auto it = handlers_.find(type.essence());
        if (it == handlers_.end()) {
            return {};
        }
        return it->second;
    }

    std::optional<std::string> default_handler(const MimeType& type) const
    {
        const auto it = defaults_.find(type.essence());
        if (it == defaults_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    friend HandlerRegistry register_handler(const HandlerRegistry& registry,
                                            std::string_view app,
                                            std::span<const MimeType> types,
                                            bool make_default);

private:
    std::map<std::string, std::vector<std::string>> handlers_;
    std::map<std::string, std::string> defaults_;
};

/// Appends `app` for each type (idempotent). With `make_default` the newest
/// registration displaces the previous default.
inline HandlerRegistry register_handler(const HandlerRegistry& registry,
                                        std::string_view app,
                                        std::span<const MimeType> types,
                                        bool make_default)
{
    if (app.empty()) {
        throw std::invalid_argument("application id must be non-empty");
    }
    HandlerRegistry next = registry;
    for (const auto& type : types) {
        auto& apps = next.handlers_[type.essence()];
        if (std::find(apps.begin(), apps.end(), app) == apps.end()) {
            apps.emplace_back(app);
        }
        if (make_default) {
            next.defaults_[type.essence()] = std::string(app);
        }
    }
    return next;
}

} // namespace contentoracle

#endif // CONTENTORACLE_MIME_HPP
