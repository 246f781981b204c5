#ifndef CONTENTORACLE_VIEW_REGISTRY_HPP
#define CONTENTORACLE_VIEW_REGISTRY_HPP

// Per-application content views and user trust, stored as file attributes.
// Every record is bound to the SHA-256 of the file contents at the time it
// was written; a later content change makes views stale and trust invalid.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "contentoracle/attribute_store.hpp"
#include "contentoracle/digest.hpp"
#include "contentoracle/error.hpp"
#include "contentoracle/mime.hpp"
#include "json.hpp"

namespace contentoracle
{

inline constexpr std::string_view kViewsAttribute = "user.contentoracle.views";
inline constexpr std::string_view kTrustAttribute = "user.contentoracle.trust";
inline constexpr std::string_view kPolicyAttribute = "user.contentoracle.policy";
inline constexpr std::string_view kOriginAttribute = "user.xdg.origin.url";
inline constexpr std::string_view kReferrerAttribute = "user.xdg.referrer.url";
inline constexpr std::string_view kQuarantineAttribute = "com.apple.quarantine";

inline constexpr std::size_t kMaxNoteBytes = 256;

/// One application's recorded opinion of a file.
struct ContentView
{
    std::string app_id;
    MimeType mime;
    bool active = false;
    Digest content_hash{};
    std::int64_t recorded_at = 0;
    std::optional<std::string> note;

    friend bool operator==(const ContentView&, const ContentView&) = default;
};

/// A stored view plus whether the file changed since it was recorded.
struct ViewState
{
    ContentView view;
    bool stale = false;

    friend bool operator==(const ViewState&, const ViewState&) = default;
};

inline void validate(const ContentView& view)
{
    if (view.app_id.empty()) {
        throw std::invalid_argument("content view needs a non-empty app id");
    }
    if (view.note && view.note->size() > kMaxNoteBytes) {
        throw std::invalid_argument("content view note exceeds 256 bytes");
    }
    if (view.note && !unicode::valid_utf8(*view.note)) {
        throw std::invalid_argument("content view note must be UTF-8");
    }
    if (!unicode::valid_utf8(view.app_id)) {
        throw std::invalid_argument("content view app id must be UTF-8");
    }
}

inline nlohmann::json to_json(const ContentView& view)
{
    nlohmann::json j = {
        {"active", view.active},
        {"app", view.app_id},
        {"hash", to_hex(view.content_hash)},
        {"mime", format(view.mime)},
        {"t", view.recorded_at},
    };
    if (view.note) {
        j["note"] = *view.note;
    }
    return j;
}

inline ContentView content_view_from_json(const nlohmann::json& j)
{
    ContentView view;
    view.app_id = j.at("app").get<std::string>();
    view.mime = parse_mime_type(j.at("mime").get<std::string>());
    view.active = j.at("active").get<bool>();
    const auto hash = digest_from_hex(j.at("hash").get<std::string>());
    if (!hash) {
        throw Error("content view hash is not 64 lowercase hex digits");
    }
    view.content_hash = *hash;
    view.recorded_at = j.at("t").get<std::int64_t>();
    if (const auto it = j.find("note"); it != j.end() && !it->is_null()) {
        view.note = it->get<std::string>();
    }
    validate(view);
    return view;
}

/// Canonical form: {"v":1,"views":[...]} with views sorted by app id, keys
/// sorted, no insignificant whitespace.
inline std::string encode_views(std::vector<ContentView> views)
{
    std::sort(views.begin(), views.end(),
              [](const ContentView& a, const ContentView& b) { return a.app_id < b.app_id; });
    nlohmann::json list = nlohmann::json::array();
    for (const auto& v : views) {
        validate(v);
        list.push_back(to_json(v));
    }
    return nlohmann::json{{"v", 1}, {"views", list}}.dump();
}

/// Accepts any key order or view order; throws Error on malformed input.
inline std::vector<ContentView> decode_views(std::string_view text)
{
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.at("v").get<int>() != 1) {
            throw Error("unsupported views version");
        }
        std::vector<ContentView> views;
        for (const auto& item : doc.at("views")) {
            views.push_back(content_view_from_json(item));
        }
        std::sort(views.begin(), views.end(),
                  [](const ContentView& a, const ContentView& b) { return a.app_id < b.app_id; });
        return views;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed views attribute: ") + e.what());
    } catch (const MalformedMime& e) {
        throw Error(std::string("malformed views attribute: ") + e.what());
    }
}

namespace detail
{

inline void require_file(const fs::path& path)
{
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        throw IoError("not a regular file", path.string());
    }
}

inline std::vector<ContentView> stored_views(const AttributeStore& store, const fs::path& path)
{
    const auto raw = store.get(path, kViewsAttribute);
    if (!raw) {
        return {};
    }
    return decode_views(*raw);
}

} // namespace detail

/// Adds or replaces (latest wins per app id) a view. Serialized against
/// other writers by an exclusive lock on the target file.
inline void record_view(AttributeStore& store, const fs::path& path, const ContentView& view)
{
    validate(view);
    detail::require_file(path);
    FileLock lock(path, FileLock::Mode::Exclusive);
    auto views = detail::stored_views(store, path);
    std::erase_if(views, [&](const ContentView& v) { return v.app_id == view.app_id; });
    views.push_back(view);
    store.set(path, kViewsAttribute, encode_views(std::move(views)));
}

/// All views sorted by app id; stale is computed against the current digest.
inline std::vector<ViewState> read_views(const AttributeStore& store, const fs::path& path)
{
    detail::require_file(path);
    const auto views = detail::stored_views(store, path);
    if (views.empty()) {
        return {};
    }
    const Digest current = content_identity(path);
    std::vector<ViewState> out;
    out.reserve(views.size());
    for (const auto& v : views) {
        out.push_back({v, v.content_hash != current});
    }
    return out;
}

enum class TrustState
{
    Unset,
    Untrusted,
    Trusted,
    Invalidated,
};

inline std::string_view to_string(TrustState t)
{
    switch (t) {
    case TrustState::Unset: return "Unset";
    case TrustState::Untrusted: return "Untrusted";
    case TrustState::Trusted: return "Trusted";
    case TrustState::Invalidated: return "Invalidated";
    }
    return "?";
}

struct TrustRecord
{
    bool trusted = false;
    Digest content_hash{};
    std::int64_t decided_at = 0;
};

inline std::string encode_trust(const TrustRecord& r)
{
    return nlohmann::json{{"hash", to_hex(r.content_hash)},
                          {"t", r.decided_at},
                          {"trusted", r.trusted},
                          {"v", 1}}
        .dump();
}

inline TrustRecord decode_trust(std::string_view text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        const auto hash = digest_from_hex(j.at("hash").get<std::string>());
        if (!hash) {
            throw Error("trust record hash is malformed");
        }
        return {j.at("trusted").get<bool>(), *hash, j.at("t").get<std::int64_t>()};
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed trust attribute: ") + e.what());
    }
}

/// Binds the decision to the file's current digest.
inline void set_trust(AttributeStore& store, const fs::path& path, bool trusted, std::int64_t now)
{
    detail::require_file(path);
    FileLock lock(path, FileLock::Mode::Exclusive);
    store.set(path, kTrustAttribute, encode_trust({trusted, content_identity(path), now}));
}

inline TrustState get_trust(const AttributeStore& store, const fs::path& path)
{
    detail::require_file(path);
    const auto raw = store.get(path, kTrustAttribute);
    if (!raw) {
        return TrustState::Unset;
    }
    const TrustRecord record = decode_trust(*raw);
    if (record.content_hash != content_identity(path)) {
        return TrustState::Invalidated;
    }
    return record.trusted ? TrustState::Trusted : TrustState::Untrusted;
}

/// Download provenance, passed through verbatim.
struct Provenance
{
    std::optional<std::string> origin_url;
    std::optional<std::string> referrer_url;
    std::optional<std::string> quarantine;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

inline Provenance read_provenance(const AttributeStore& store, const fs::path& path)
{
    detail::require_file(path);
    return {store.get(path, kOriginAttribute), store.get(path, kReferrerAttribute),
            store.get(path, kQuarantineAttribute)};
}

/// Writes the xdg origin/referrer attributes the way download managers do.
inline void write_provenance(AttributeStore& store, const fs::path& path,
                             std::string_view origin_url,
                             std::optional<std::string_view> referrer_url)
{
    detail::require_file(path);
    store.set(path, kOriginAttribute, origin_url);
    if (referrer_url && !referrer_url->empty()) {
        store.set(path, kReferrerAttribute, *referrer_url);
    }
}

} // namespace contentoracle

#endif // CONTENTORACLE_VIEW_REGISTRY_HPP
