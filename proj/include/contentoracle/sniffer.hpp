#ifndef CONTENTORACLE_SNIFFER_HPP
#define CONTENTORACLE_SNIFFER_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/utf8.h>

#include "contentoracle/error.hpp"
#include "contentoracle/mime.hpp"

namespace contentoracle
{

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s)
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

/// Signatures are matched at their fixed offset inside this many leading
/// bytes. Polyglot-relevant signatures are additionally searched across the
/// whole input.
inline constexpr std::size_t kPrimaryWindow = 8192;

/// The text heuristic only looks at this many leading bytes.
inline constexpr std::size_t kTextWindow = 4096;

struct Signature
{
    std::string name;
    MimeType mime;
    std::size_t offset = 0;
    Bytes pattern;
    Bytes mask;  // empty, or same length as pattern
    int weight = 0;
    bool polyglot_relevant = false;

    /// (b & m) == (p & m) for every pattern byte, m = 0xff without a mask.
    bool matches_at(ByteView data, std::size_t pos) const
    {
        if (pos > data.size() || data.size() - pos < pattern.size()) {
            return false;
        }
        for (std::size_t i = 0; i < pattern.size(); ++i) {
            const std::uint8_t m = mask.empty() ? 0xff : mask[i];
            if ((data[pos + i] & m) != (pattern[i] & m)) {
                return false;
            }
        }
        return true;
    }

    /// First match at or after `offset` anywhere in `data`.
    std::optional<std::size_t> find(ByteView data) const
    {
        if (data.size() < pattern.size() || offset > data.size() - pattern.size()) {
            return std::nullopt;
        }
        if (mask.empty()) {
            const auto it = std::search(
                data.begin() + static_cast<std::ptrdiff_t>(offset), data.end(),
                std::boyer_moore_horspool_searcher(pattern.begin(), pattern.end()));
            if (it == data.end()) {
                return std::nullopt;
            }
            return static_cast<std::size_t>(it - data.begin());
        }
        for (std::size_t pos = offset; pos + pattern.size() <= data.size(); ++pos) {
            if (matches_at(data, pos)) {
                return pos;
            }
        }
        return std::nullopt;
    }
};

class SignatureDb
{
public:
    SignatureDb() = default;

    /// Throws std::invalid_argument on a duplicate name or an invalid record.
    void add(Signature sig)
    {
        if (sig.pattern.empty()) {
            throw std::invalid_argument("signature pattern must be non-empty");
        }
        if (!sig.mask.empty() && sig.mask.size() != sig.pattern.size()) {
            throw std::invalid_argument("mask length must equal pattern length");
        }
        if (!names_.insert(sig.name).second) {
            throw std::invalid_argument("duplicate signature name: " + sig.name);
        }
        signatures_.push_back(std::move(sig));
    }

    std::span<const Signature> signatures() const noexcept { return signatures_; }
    std::size_t size() const noexcept { return signatures_.size(); }
    bool empty() const noexcept { return signatures_.empty(); }

    const Signature* find(std::string_view name) const
    {
        for (const auto& sig : signatures_) {
            if (sig.name == name) {
                return &sig;
            }
        }
        return nullptr;
    }

private:
    std::vector<Signature> signatures_;
    std::set<std::string, std::less<>> names_;
};

namespace detail
{

inline Bytes parse_hex(std::string_view hex, std::size_t line)
{
    if (hex.empty() || hex.size() % 2 != 0) {
        throw MalformedSignature(line, "hex field must have an even, non-zero length");
    }
    auto nibble = [line](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') {
            return static_cast<std::uint8_t>(c - '0');
        }
        if (c >= 'a' && c <= 'f') {
            return static_cast<std::uint8_t>(c - 'a' + 10);
        }
        throw MalformedSignature(line, std::string("invalid hex digit '") + c + "'");
    };
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        out.push_back(static_cast<std::uint8_t>(nibble(hex[i]) << 4 | nibble(hex[i + 1])));
    }
    return out;
}

inline std::size_t parse_decimal(std::string_view s, std::size_t line, const char* what)
{
    if (s.empty() || s.size() > 12 ||
        !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw MalformedSignature(line, std::string("invalid ") + what + " '" +
                                           std::string(s) + "'");
    }
    return std::stoull(std::string(s));
}

} // namespace detail

/// Record format, one per line, '#' comments:
///   name | family/subtype | offset | pattern-hex | mask-hex or - | weight or - | 0/1
inline SignatureDb load_signatures(std::istream& in)
{
    SignatureDb db;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto content = detail::trim(line);
        if (content.empty() || content.front() == '#') {
            continue;
        }
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        for (std::size_t bar; (bar = content.find('|', start)) != std::string_view::npos;
             start = bar + 1) {
            fields.push_back(detail::trim(content.substr(start, bar - start)));
        }
        fields.push_back(detail::trim(content.substr(start)));
        if (fields.size() != 7) {
            throw MalformedSignature(number, "expected 7 '|'-separated fields, got " +
                                                 std::to_string(fields.size()));
        }

        Signature sig;
        sig.name = std::string(fields[0]);
        if (sig.name.empty()) {
            throw MalformedSignature(number, "empty signature name");
        }
        const auto mime = try_parse_mime_type(fields[1]);
        if (!mime || !mime->parameters.empty()) {
            throw MalformedSignature(number, "invalid media type '" + std::string(fields[1]) + "'");
        }
        sig.mime = *mime;
        sig.offset = detail::parse_decimal(fields[2], number, "offset");
        sig.pattern = detail::parse_hex(fields[3], number);
        if (fields[4] != "-") {
            sig.mask = detail::parse_hex(fields[4], number);
            if (sig.mask.size() != sig.pattern.size()) {
                throw MalformedSignature(number, "mask length differs from pattern length");
            }
        }
        sig.weight = fields[5] == "-"
                         ? static_cast<int>(sig.pattern.size())
                         : static_cast<int>(detail::parse_decimal(fields[5], number, "weight"));
        if (fields[6] != "0" && fields[6] != "1") {
            throw MalformedSignature(number, "polyglot flag must be 0 or 1");
        }
        sig.polyglot_relevant = fields[6] == "1";

        if (db.find(sig.name) != nullptr) {
            throw DuplicateName(number, "duplicate signature name '" + sig.name + "'");
        }
        db.add(std::move(sig));
    }
    return db;
}

inline SignatureDb load_signatures(std::string_view text)
{
    std::istringstream in{std::string(text)};
    return load_signatures(in);
}

enum class TextFallback
{
    NotApplied,
    LooksText,
    LooksBinary,
};

inline std::string_view to_string(TextFallback t)
{
    switch (t) {
    case TextFallback::NotApplied: return "NotApplied";
    case TextFallback::LooksText: return "LooksText";
    case TextFallback::LooksBinary: return "LooksBinary";
    }
    return "?";
}

struct SniffCandidate
{
    MimeType mime;
    std::string signature;
    int weight = 0;
    std::size_t offset = 0;

    friend bool operator==(const SniffCandidate&, const SniffCandidate&) = default;
};

struct SniffReport
{
    std::vector<SniffCandidate> candidates;
    bool is_polyglot = false;
    TextFallback text_fallback = TextFallback::NotApplied;
    std::size_t bytes_examined = 0;

    const SniffCandidate* top() const
    {
        return candidates.empty() ? nullptr : &candidates.front();
    }

    friend bool operator==(const SniffReport&, const SniffReport&) = default;
};

/// No NUL in the first 4096 bytes and at least 95% of them printable:
/// 0x20-0x7e, tab, LF, CR, or part of a well-formed multi-byte UTF-8 sequence.
inline bool is_text(ByteView data)
{
    const std::size_t window = std::min(data.size(), kTextWindow);
    if (window == 0) {
        return true;
    }
    std::size_t printable = 0;
    std::size_t i = 0;
    while (i < window) {
        const std::uint8_t b = data[i];
        if (b == 0x00) {
            return false;
        }
        if (b < 0x80) {
            if ((b >= 0x20 && b <= 0x7e) || b == 0x09 || b == 0x0a || b == 0x0d) {
                ++printable;
            }
            ++i;
            continue;
        }
        // Decode against the whole buffer so a sequence cut by the window
        // edge still counts as well-formed.
        auto pos = static_cast<int32_t>(i);
        const auto limit = static_cast<int32_t>(std::min<std::size_t>(data.size(), INT32_MAX));
        UChar32 c;
        U8_NEXT(data.data(), pos, limit, c);
        const auto next = static_cast<std::size_t>(pos);
        if (c >= 0) {
            printable += std::min(next, window) - i;
            i = next;
        } else {
            ++i;
        }
    }
    return printable * 100 >= window * 95;
}

inline bool is_text(std::string_view data) { return is_text(as_bytes(data)); }

/// Candidates are ordered by weight (desc), offset (asc), name (asc).
inline bool candidate_before(const SniffCandidate& a, const SniffCandidate& b)
{
    if (a.weight != b.weight) {
        return a.weight > b.weight;
    }
    if (a.offset != b.offset) {
        return a.offset < b.offset;
    }
    return a.signature < b.signature;
}

/// Magic matching in two tiers: every signature at its fixed offset within
/// the primary window, then polyglot-relevant signatures anywhere. Falls back
/// to the text heuristic when nothing matched.
inline SniffReport sniff(ByteView data, const SignatureDb& db)
{
    SniffReport report;
    const ByteView primary = data.first(std::min(data.size(), kPrimaryWindow));
    bool full_scan = false;

    for (const auto& sig : db.signatures()) {
        std::optional<std::size_t> at;
        if (sig.matches_at(primary, sig.offset)) {
            at = sig.offset;
        } else if (sig.polyglot_relevant) {
            full_scan = true;
            at = sig.find(data);
        }
        if (at) {
            report.candidates.push_back({sig.mime, sig.name, sig.weight, *at});
        }
    }
    std::sort(report.candidates.begin(), report.candidates.end(), candidate_before);

    std::set<std::string> distinct;
    for (const auto& c : report.candidates) {
        distinct.insert(c.mime.essence());
    }
    report.is_polyglot = distinct.size() >= 2;

    report.bytes_examined = full_scan ? data.size() : primary.size();
    if (report.candidates.empty()) {
        report.text_fallback = is_text(data) ? TextFallback::LooksText : TextFallback::LooksBinary;
        report.bytes_examined = std::max(report.bytes_examined, std::min(data.size(), kTextWindow));
    }
    return report;
}

inline SniffReport sniff(std::string_view data, const SignatureDb& db)
{
    return sniff(as_bytes(data), db);
}

} // namespace contentoracle

#endif // CONTENTORACLE_SNIFFER_HPP
