#ifndef CONTENTORACLE_UNICODE_HPP
#define CONTENTORACLE_UNICODE_HPP

// Thin UTF-8 helpers over ICU. Invalid input sequences are replaced with
// U+FFFD by ICU's converters, so every function here is total.

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/ubidi.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace contentoracle::unicode
{

inline icu::UnicodeString to_icu(std::string_view utf8)
{
    return icu::UnicodeString::fromUTF8(
        icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
}

inline std::string to_utf8(const icu::UnicodeString& s)
{
    std::string out;
    s.toUTF8String(out);
    return out;
}

inline std::string nfc(std::string_view utf8)
{
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) {
        return std::string(utf8);
    }
    icu::UnicodeString result = normalizer->normalize(to_icu(utf8), status);
    if (U_FAILURE(status)) {
        return std::string(utf8);
    }
    return to_utf8(result);
}

inline std::string lower(std::string_view utf8)
{
    icu::UnicodeString s = to_icu(utf8);
    s.toLower(icu::Locale::getRoot());
    return to_utf8(s);
}

/// NFC followed by root-locale lowercasing.
inline std::string fold(std::string_view utf8) { return lower(nfc(utf8)); }

inline bool valid_utf8(std::string_view s)
{
    const auto* p = reinterpret_cast<const uint8_t*>(s.data());
    const auto n = static_cast<int32_t>(s.size());
    int32_t i = 0;
    while (i < n) {
        UChar32 c;
        U8_NEXT(p, i, n, c);
        if (c < 0) {
            return false;
        }
    }
    return true;
}

inline std::vector<char32_t> code_points(std::string_view s)
{
    std::vector<char32_t> out;
    const auto* p = reinterpret_cast<const uint8_t*>(s.data());
    const auto n = static_cast<int32_t>(s.size());
    int32_t i = 0;
    while (i < n) {
        UChar32 c;
        U8_NEXT(p, i, n, c);
        out.push_back(c < 0 ? char32_t{0xFFFD} : static_cast<char32_t>(c));
    }
    return out;
}

inline std::string encode(char32_t cp)
{
    std::string out;
    icu::UnicodeString s(static_cast<UChar32>(cp));
    s.toUTF8String(out);
    return out;
}

/// Embedding, override and isolate controls: U+202A..U+202E, U+2066..U+2069.
inline bool is_bidi_control(char32_t cp)
{
    return (cp >= 0x202A && cp <= 0x202E) || (cp >= 0x2066 && cp <= 0x2069);
}

inline bool is_whitespace(char32_t cp)
{
    return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0;
}

/// Scripts of the letters in `s`, ignoring Common and Inherited.
inline std::set<UScriptCode> scripts_of(std::string_view s)
{
    std::set<UScriptCode> out;
    for (char32_t cp : code_points(s)) {
        UErrorCode status = U_ZERO_ERROR;
        UScriptCode script = uscript_getScript(static_cast<UChar32>(cp), &status);
        if (U_FAILURE(status) || script == USCRIPT_COMMON ||
            script == USCRIPT_INHERITED || script == USCRIPT_UNKNOWN) {
            continue;
        }
        out.insert(script);
    }
    return out;
}

/// The left-to-right display order of a logical string, as a bidi-aware
/// renderer would show it, with the directional controls removed.
inline std::string visual_order(std::string_view logical)
{
    icu::UnicodeString text = to_icu(logical);
    UErrorCode status = U_ZERO_ERROR;
    UBiDi* bidi = ubidi_openSized(text.length(), 0, &status);
    if (U_FAILURE(status)) {
        return std::string(logical);
    }
    ubidi_setPara(bidi, text.getBuffer(), text.length(), UBIDI_DEFAULT_LTR,
                  nullptr, &status);
    std::string out(logical);
    if (U_SUCCESS(status)) {
        std::vector<UChar> buffer(static_cast<std::size_t>(text.length()) + 1);
        const int32_t written = ubidi_writeReordered(
            bidi, buffer.data(), static_cast<int32_t>(buffer.size()),
            UBIDI_REMOVE_BIDI_CONTROLS, &status);
        if (U_SUCCESS(status)) {
            out = to_utf8(icu::UnicodeString(buffer.data(), written));
        }
    }
    ubidi_close(bidi);
    return out;
}

} // namespace contentoracle::unicode

#endif // CONTENTORACLE_UNICODE_HPP
