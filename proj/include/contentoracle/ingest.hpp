#ifndef CONTENTORACLE_INGEST_HPP
#define CONTENTORACLE_INGEST_HPP

// Download a URL to disk, keep the headers that identify the payload, record
// provenance, and run the full check on the result.

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <fcntl.h>
#include <stdlib.h>
#include <unistd.h>

#include "contentoracle/pipeline.hpp"
#include "contentoracle/unicode.hpp"
#include "httplib.h"

namespace contentoracle
{

inline constexpr int kMaxRedirects = 5;
inline constexpr std::string_view kIngestApp = "contentoracle.ingest";

/// Raw header values as received. Absent headers stay nullopt.
struct CapturedHeaders
{
    std::optional<std::string> content_type;
    std::optional<std::string> content_disposition;
    std::optional<std::string> x_content_type_options;

    friend bool operator==(const CapturedHeaders&, const CapturedHeaders&) = default;
};

struct FetchRecord
{
    /// Final URL after redirects.
    std::string url;
    int status = 0;
    CapturedHeaders headers;
    fs::path body_path;
    std::int64_t fetched_at = 0;
    /// What sanitizing changed about the served name.
    std::vector<std::string> name_notes;
};

struct FetchOptions
{
    std::optional<std::string> referrer;
    Clock clock = now_seconds;
    int connect_timeout_seconds = 10;
    int read_timeout_seconds = 30;
};

struct Url
{
    std::string scheme;
    std::string authority;
    std::string target; // path plus query, never empty

    std::string origin() const { return scheme + "://" + authority; }
    std::string str() const { return origin() + target; }

    /// Path without query, still percent-encoded.
    std::string path() const { return target.substr(0, target.find_first_of("?#")); }
};

inline Url parse_url(std::string_view text)
{
    static const std::regex re(R"(^([A-Za-z][A-Za-z0-9+.-]*)://([^/?#\s]+)([^#\s]*)(#.*)?$)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(text.begin(), text.end(), m, re)) {
        throw NetworkError("invalid URL: " + std::string(text));
    }
    Url url{detail::ascii_lower(m[1].str()), m[2].str(), m[3].str()};
    if (url.scheme != "http" && url.scheme != "https") {
        throw NetworkError("unsupported URL scheme: " + url.scheme);
    }
    if (url.target.empty() || url.target.front() != '/') {
        url.target.insert(0, "/");
    }
    return url;
}

/// Resolves a Location header against the URL that produced it.
inline Url resolve_location(const Url& base, std::string_view location)
{
    if (location.find("://") != std::string_view::npos) {
        return parse_url(location);
    }
    if (location.starts_with("//")) {
        return parse_url(base.scheme + ":" + std::string(location));
    }
    if (location.starts_with("/")) {
        return parse_url(base.origin() + std::string(location));
    }
    const std::string path = base.path();
    return parse_url(base.origin() + path.substr(0, path.rfind('/') + 1) + std::string(location));
}

namespace detail
{

inline std::string percent_decode(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    auto hex = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size() && hex(s[i + 1]) >= 0 && hex(s[i + 2]) >= 0) {
            out += static_cast<char>(hex(s[i + 1]) * 16 + hex(s[i + 2]));
            i += 2;
        } else {
            out += s[i];
        }
    }
    return out;
}

} // namespace detail

inline constexpr std::size_t kMaxFilenameBytes = 255;

/// Turns the final URL path segment into a safe local name. The result never
/// contains a path separator and is never "." or "..", so joining it to the
/// destination directory cannot escape it.
inline std::string sanitize_filename(std::string_view url_path, std::vector<std::string>* notes = nullptr)
{
    auto note = [&](std::string text) {
        if (notes) notes->push_back(std::move(text));
    };
    const auto slash = url_path.rfind('/');
    std::string segment = detail::percent_decode(
        slash == std::string_view::npos ? url_path : url_path.substr(slash + 1));
    // Separators can only appear here if they were percent-encoded.
    if (segment.find_first_of("/\\") != std::string::npos) {
        std::replace(segment.begin(), segment.end(), '/', '_');
        std::replace(segment.begin(), segment.end(), '\\', '_');
        note("encoded path separators replaced");
    }

    std::string out;
    bool stripped_bidi = false;
    bool stripped_control = false;
    for (const char32_t cp : unicode::code_points(segment)) {
        if (unicode::is_bidi_control(cp)) {
            stripped_bidi = true;
            continue;
        }
        if (cp < 0x20 || cp == 0x7f) {
            stripped_control = true;
            continue;
        }
        out += unicode::encode(cp);
    }
    if (stripped_bidi) note("directional override characters stripped");
    if (stripped_control) note("control characters stripped");

    if (out.size() > kMaxFilenameBytes) {
        std::size_t end = kMaxFilenameBytes;
        while (end > 0 && (static_cast<unsigned char>(out[end]) & 0xC0) == 0x80) {
            --end;
        }
        out.resize(end);
        note("name truncated");
    }
    if (out.find_first_not_of('.') == std::string::npos) {
        if (!out.empty() || !segment.empty()) note("unusable name replaced");
        out = "download";
    }
    return out;
}

namespace detail
{

/// Moves `from` to `dir/name` without replacing an existing file, adding
/// "-1", "-2" ... before the extension as needed.
inline fs::path place_without_clobber(const fs::path& from, const fs::path& dir, const std::string& name)
{
    const fs::path base(name);
    const std::string stem = base.stem().string();
    const std::string ext = base.extension().string();
    for (int i = 0; i < 10000; ++i) {
        const fs::path target = dir / (i == 0 ? name : stem + "-" + std::to_string(i) + ext);
        if (::renameat2(AT_FDCWD, from.c_str(), AT_FDCWD, target.c_str(), RENAME_NOREPLACE) == 0) {
            return target;
        }
        if (errno != EEXIST) {
            throw IoError(std::string("cannot place download: ") + std::strerror(errno), target.string());
        }
    }
    throw IoError("too many files with the same name", (dir / name).string());
}

class TempFile
{
public:
    explicit TempFile(const fs::path& dir)
    {
        std::string pattern = (dir / ".contentoracle-partial-XXXXXX").string();
        fd_ = ::mkstemp(pattern.data());
        if (fd_ < 0) {
            throw IoError(std::string("cannot create file: ") + std::strerror(errno), dir.string());
        }
        path_ = pattern;
    }

    TempFile(const TempFile&) = delete;
    TempFile& operator=(const TempFile&) = delete;

    ~TempFile()
    {
        close();
        if (!path_.empty()) {
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }

    bool write(const char* data, std::size_t size)
    {
        while (size > 0) {
            const ssize_t n = ::write(fd_, data, size);
            if (n < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            data += n;
            size -= static_cast<std::size_t>(n);
        }
        return true;
    }

    void close()
    {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    /// Hands ownership of the file to the caller.
    fs::path release()
    {
        close();
        return std::exchange(path_, fs::path{});
    }

    const fs::path& path() const noexcept { return path_; }

private:
    int fd_ = -1;
    fs::path path_;
};

inline std::optional<std::string> header(const httplib::Headers& headers, const char* name)
{
    const auto it = headers.find(name);
    if (it == headers.end()) {
        return std::nullopt;
    }
    return it->second;
}

inline bool is_redirect(int status)
{
    return status == 301 || status == 302 || status == 303 || status == 307 || status == 308;
}

} // namespace detail

/// Downloads `url` into `dest_dir`. Non-2xx responses throw HttpError and
/// leave nothing behind.
inline FetchRecord fetch(const std::string& url, const fs::path& dest_dir, AttributeStore& store,
                         const FetchOptions& options = {})
{
    std::error_code ec;
    if (!fs::is_directory(dest_dir, ec)) {
        throw IoError("destination is not a directory", dest_dir.string());
    }

    Url current = parse_url(url);
    for (int hop = 0;; ++hop) {
        httplib::Client client(current.origin());
        client.set_follow_location(false);
        client.set_connection_timeout(options.connect_timeout_seconds, 0);
        client.set_read_timeout(options.read_timeout_seconds, 0);

        httplib::Headers request_headers;
        if (options.referrer) {
            request_headers.emplace("Referer", *options.referrer);
        }

        detail::TempFile body(dest_dir);
        int status = 0;
        bool write_failed = false;
        auto result = client.Get(
            current.target, request_headers,
            [&](const httplib::Response& response) {
                status = response.status;
                return true;
            },
            [&](const char* data, std::size_t size) {
                if (status < 200 || status >= 300) {
                    return true; // drain and discard
                }
                if (!body.write(data, size)) {
                    write_failed = true;
                    return false;
                }
                return true;
            });
        if (write_failed) {
            throw IoError("write failed while downloading", body.path().string());
        }
        if (!result) {
            throw NetworkError("request to " + current.str() + " failed: " +
                               httplib::to_string(result.error()));
        }
        const httplib::Response& response = result.value();

        if (detail::is_redirect(response.status)) {
            const auto location = detail::header(response.headers, "Location");
            if (!location) {
                throw HttpError(response.status);
            }
            if (hop >= kMaxRedirects) {
                throw NetworkError("too many redirects fetching " + url);
            }
            current = resolve_location(current, *location);
            continue;
        }
        if (response.status < 200 || response.status >= 300) {
            throw HttpError(response.status);
        }

        FetchRecord record;
        record.url = current.str();
        record.status = response.status;
        record.headers = {detail::header(response.headers, "Content-Type"),
                          detail::header(response.headers, "Content-Disposition"),
                          detail::header(response.headers, "X-Content-Type-Options")};
        const std::string name = sanitize_filename(current.path(), &record.name_notes);
        body.close();
        const fs::path partial = body.path();
        record.body_path = detail::place_without_clobber(partial, dest_dir, name);
        body.release();
        record.fetched_at = options.clock();
        write_provenance(store, record.body_path, record.url, options.referrer);
        return record;
    }
}

inline bool nosniff_requested(const CapturedHeaders& headers)
{
    return headers.x_content_type_options &&
           detail::iequals(detail::trim(*headers.x_content_type_options), "nosniff");
}

/// Evidence options implied by the captured headers. An unparseable
/// Content-Type counts as absent.
inline EvidenceOptions evidence_options(const CapturedHeaders& headers)
{
    EvidenceOptions options;
    if (headers.content_type) {
        options.declared_mime = try_parse_mime_type(*headers.content_type);
    }
    options.nosniff = nosniff_requested(headers);
    return options;
}

/// Runs the full check on a fetched file, then records this tool's own view
/// of it. The view is written after evaluation so it cannot influence the
/// report it came from.
inline Assessment assess(const FetchRecord& record, const Databases& db, AttributeStore& store,
                         const Clock& clock = now_seconds)
{
    Assessment a = check_file(record.body_path, db, store, evidence_options(record.headers));
    ContentView view;
    view.app_id = std::string(kIngestApp);
    view.mime = a.report.resolved_mime.value_or(MimeType{"application", "octet-stream", {}});
    view.active = a.report.resolved_active;
    view.content_hash = content_identity(record.body_path);
    view.recorded_at = clock();
    record_view(store, record.body_path, view);
    return a;
}

} // namespace contentoracle

#endif // CONTENTORACLE_INGEST_HPP
