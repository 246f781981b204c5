#ifndef CONTENTORACLE_ATTRIBUTE_STORE_HPP
#define CONTENTORACLE_ATTRIBUTE_STORE_HPP

// Per-file key/value attributes. Two interchangeable backends: Linux extended
// attributes, and a sidecar journal for filesystems (or platforms) without
// them. AttributeStore adds transparent overflow of large values from a
// size-limited backend into the sidecar.

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <sys/file.h>
#include <sys/xattr.h>
#include <unistd.h>

#include <openssl/evp.h>

#include "contentoracle/error.hpp"
#include "contentoracle/unicode.hpp"
#include "json.hpp"

namespace contentoracle
{

namespace fs = std::filesystem;

/// Seconds since the Unix epoch, UTC.
inline std::int64_t now_seconds()
{
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

/// Source of "seconds since epoch" timestamps; tests and --now pin it.
using Clock = std::function<std::int64_t()>;

/// The backend cannot hold a value this large.
class AttributeTooLarge : public IoError
{
public:
    using IoError::IoError;
};

/// The filesystem does not support extended attributes.
class AttributesUnsupported : public IoError
{
public:
    using IoError::IoError;
};

/// flock(2) held for the lifetime of the object.
class FileLock
{
public:
    enum class Mode { Shared, Exclusive };

    FileLock(const fs::path& path, Mode mode, int open_flags = O_RDONLY, mode_t create_mode = 0644)
    {
        fd_ = ::open(path.c_str(), open_flags | O_CLOEXEC, create_mode);
        if (fd_ < 0) {
            throw IoError(std::string("cannot open for locking: ") + std::strerror(errno),
                          path.string());
        }
        while (::flock(fd_, mode == Mode::Shared ? LOCK_SH : LOCK_EX) != 0) {
            if (errno != EINTR) {
                const int err = errno;
                ::close(fd_);
                throw IoError(std::string("flock failed: ") + std::strerror(err), path.string());
            }
        }
    }

    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

    ~FileLock()
    {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }

    int fd() const noexcept { return fd_; }

private:
    int fd_ = -1;
};

class AttributeBackend
{
public:
    virtual ~AttributeBackend() = default;

    virtual std::optional<std::string> get(const fs::path& file, std::string_view name) const = 0;
    virtual void set(const fs::path& file, std::string_view name, std::string_view value) = 0;
    virtual void remove(const fs::path& file, std::string_view name) = 0;

    /// Largest value accepted in one attribute, if bounded.
    virtual std::optional<std::size_t> value_limit() const = 0;
    virtual std::string_view kind() const = 0;
};

/// Linux user.* extended attributes. Names outside the user namespace (such
/// as com.apple.quarantine) are stored under a "user." prefix, which is how
/// Linux file servers carry foreign attributes.
class XattrBackend final : public AttributeBackend
{
public:
    explicit XattrBackend(std::size_t value_limit = 4096)
        : limit_(value_limit)
    {
    }

    static std::string native_name(std::string_view name)
    {
        if (name.starts_with("user.")) {
            return std::string(name);
        }
        return "user." + std::string(name);
    }

    std::optional<std::string> get(const fs::path& file, std::string_view name) const override
    {
        const std::string native = native_name(name);
        for (;;) {
            const ssize_t size = ::getxattr(file.c_str(), native.c_str(), nullptr, 0);
            if (size < 0) {
                return missing_or_throw(file, "getxattr");
            }
            std::string value(static_cast<std::size_t>(size), '\0');
            const ssize_t got = ::getxattr(file.c_str(), native.c_str(), value.data(), value.size());
            if (got < 0) {
                if (errno == ERANGE) {
                    continue;  // grew between the two calls
                }
                return missing_or_throw(file, "getxattr");
            }
            value.resize(static_cast<std::size_t>(got));
            return value;
        }
    }

    void set(const fs::path& file, std::string_view name, std::string_view value) override
    {
        if (value.size() > limit_) {
            throw AttributeTooLarge("attribute value exceeds " + std::to_string(limit_) + " bytes",
                                    file.string());
        }
        const std::string native = native_name(name);
        if (::setxattr(file.c_str(), native.c_str(), value.data(), value.size(), 0) != 0) {
            const int err = errno;
            if (err == E2BIG || err == ENOSPC || err == ERANGE) {
                throw AttributeTooLarge(std::string("setxattr: ") + std::strerror(err), file.string());
            }
            throw_errno(file, "setxattr", err);
        }
    }

    void remove(const fs::path& file, std::string_view name) override
    {
        const std::string native = native_name(name);
        if (::removexattr(file.c_str(), native.c_str()) != 0 && errno != ENODATA) {
            throw_errno(file, "removexattr", errno);
        }
    }

    std::optional<std::size_t> value_limit() const override { return limit_; }
    std::string_view kind() const override { return "xattr"; }

    /// True when the filesystem holding `file` accepts user attributes.
    static bool supported(const fs::path& file)
    {
        const ssize_t r = ::getxattr(file.c_str(), "user.contentoracle.probe", nullptr, 0);
        return r >= 0 || (errno != ENOTSUP && errno != EOPNOTSUPP);
    }

private:
    [[noreturn]] static void throw_errno(const fs::path& file, const char* call, int err)
    {
        if (err == ENOTSUP || err == EOPNOTSUPP) {
            throw AttributesUnsupported(std::string(call) + ": " + std::strerror(err), file.string());
        }
        throw IoError(std::string(call) + ": " + std::strerror(err), file.string());
    }

    static std::optional<std::string> missing_or_throw(const fs::path& file, const char* call)
    {
        if (errno == ENODATA) {
            return std::nullopt;
        }
        throw_errno(file, call, errno);
    }

    std::size_t limit_;
};

namespace detail
{

inline std::string base64_encode(std::string_view raw)
{
    std::string out(4 * ((raw.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(raw.data()),
                                  static_cast<int>(raw.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

inline std::optional<std::string> base64_decode(std::string_view text)
{
    if (text.size() % 4 != 0) {
        return std::nullopt;
    }
    std::string out(3 * text.size() / 4, '\0');
    const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) {
        return std::nullopt;
    }
    std::size_t size = static_cast<std::size_t>(n);
    // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
    if (!text.empty() && text.back() == '=') --size;
    if (text.size() >= 2 && text[text.size() - 2] == '=') --size;
    out.resize(size);
    return out;
}

} // namespace detail

/// Attribute store backed by one newline-delimited JSON journal:
///   {"key":..., "path":..., "t":..., "value":...}
/// The last record for a (path, key) pair wins; a null value deletes.
/// Values that are not valid UTF-8 carry "enc":"base64".
class SidecarBackend final : public AttributeBackend
{
public:
    explicit SidecarBackend(fs::path journal, Clock clock = now_seconds)
        : journal_(std::move(journal))
        , clock_(std::move(clock))
    {
    }

    const fs::path& journal() const noexcept { return journal_; }

    /// Journal identity of a file: its absolute path with symlinks resolved.
    static std::string identity(const fs::path& file)
    {
        std::error_code ec;
        fs::path p = fs::weakly_canonical(fs::absolute(file), ec);
        if (ec) {
            p = fs::absolute(file).lexically_normal();
        }
        return p.string();
    }

    std::optional<std::string> get(const fs::path& file, std::string_view name) const override
    {
        if (!fs::exists(journal_)) {
            return std::nullopt;
        }
        const std::string id = identity(file);
        FileLock lock(journal_, FileLock::Mode::Shared);
        std::ifstream in(journal_, std::ios::binary);
        if (!in) {
            throw IoError("cannot read sidecar journal", journal_.string());
        }
        std::optional<std::string> value;
        std::string line;
        while (std::getline(in, line)) {
            auto record = nlohmann::json::parse(line, nullptr, false);
            if (record.is_discarded() || !record.is_object()) {
                continue;  // torn or foreign line
            }
            if (record.value("path", "") != id || record.value("key", "") != name) {
                continue;
            }
            value = decode_value(record);
        }
        return value;
    }

    void set(const fs::path& file, std::string_view name, std::string_view value) override
    {
        nlohmann::json record = {
            {"key", name}, {"path", identity(file)}, {"t", clock_()}};
        if (unicode::valid_utf8(value)) {
            record["value"] = value;
        } else {
            record["value"] = detail::base64_encode(value);
            record["enc"] = "base64";
        }
        append(record);
    }

    void remove(const fs::path& file, std::string_view name) override
    {
        append({{"key", name}, {"path", identity(file)}, {"t", clock_()}, {"value", nullptr}});
    }

    std::optional<std::size_t> value_limit() const override { return std::nullopt; }
    std::string_view kind() const override { return "sidecar"; }

private:
    static std::optional<std::string> decode_value(const nlohmann::json& record)
    {
        const auto it = record.find("value");
        if (it == record.end() || !it->is_string()) {
            return std::nullopt;
        }
        if (record.value("enc", "") == "base64") {
            return detail::base64_decode(it->get<std::string>());
        }
        return it->get<std::string>();
    }

    void append(const nlohmann::json& record)
    {
        if (journal_.has_parent_path()) {
            std::error_code ec;
            fs::create_directories(journal_.parent_path(), ec);
        }
        FileLock lock(journal_, FileLock::Mode::Exclusive, O_WRONLY | O_CREAT | O_APPEND);
        const std::string line = record.dump() + "\n";
        // One write(2) per record so concurrent readers never see half of it.
        const ssize_t n = ::write(lock.fd(), line.data(), line.size());
        if (n != static_cast<ssize_t>(line.size())) {
            throw IoError("short write to sidecar journal", journal_.string());
        }
    }

    fs::path journal_;
    Clock clock_;
};

/// Extended attributes where the filesystem supports them, the sidecar
/// journal elsewhere.
class AutoBackend final : public AttributeBackend
{
public:
    AutoBackend(std::shared_ptr<XattrBackend> xattr, std::shared_ptr<SidecarBackend> sidecar)
        : xattr_(std::move(xattr))
        , sidecar_(std::move(sidecar))
    {
    }

    std::optional<std::string> get(const fs::path& file, std::string_view name) const override
    {
        try {
            return xattr_->get(file, name);
        } catch (const AttributesUnsupported&) {
            return sidecar_->get(file, name);
        }
    }

    void set(const fs::path& file, std::string_view name, std::string_view value) override
    {
        try {
            xattr_->set(file, name, value);
        } catch (const AttributesUnsupported&) {
            sidecar_->set(file, name, value);
        }
    }

    void remove(const fs::path& file, std::string_view name) override
    {
        try {
            xattr_->remove(file, name);
        } catch (const AttributesUnsupported&) {
            sidecar_->remove(file, name);
        }
    }

    std::optional<std::size_t> value_limit() const override { return xattr_->value_limit(); }
    std::string_view kind() const override { return "auto"; }

private:
    std::shared_ptr<XattrBackend> xattr_;
    std::shared_ptr<SidecarBackend> sidecar_;
};

/// Values above this size leave the primary backend for the sidecar.
inline constexpr std::size_t kOverflowThreshold = 4096;

/// Stub left in the primary backend when a value lives in the sidecar.
inline constexpr std::string_view kRedirectStub = R"({"redirect":"sidecar","v":1})";

/// Front end used by the registries. Reads resolve overflow stubs
/// transparently.
class AttributeStore
{
public:
    AttributeStore(std::shared_ptr<AttributeBackend> primary,
                   std::shared_ptr<SidecarBackend> overflow)
        : primary_(std::move(primary))
        , overflow_(std::move(overflow))
    {
    }

    /// Sidecar-only store.
    static AttributeStore sidecar(const fs::path& journal, Clock clock = now_seconds)
    {
        auto backend = std::make_shared<SidecarBackend>(journal, clock);
        return AttributeStore(backend, backend);
    }

    /// Extended attributes with sidecar overflow.
    static AttributeStore xattr(const fs::path& overflow_journal,
                                Clock clock = now_seconds)
    {
        return AttributeStore(std::make_shared<XattrBackend>(kOverflowThreshold),
                              std::make_shared<SidecarBackend>(overflow_journal, clock));
    }

    /// Extended attributes, falling back to the sidecar where unsupported.
    static AttributeStore automatic(const fs::path& journal, Clock clock = now_seconds)
    {
        auto sidecar = std::make_shared<SidecarBackend>(journal, clock);
        return AttributeStore(
            std::make_shared<AutoBackend>(std::make_shared<XattrBackend>(kOverflowThreshold), sidecar),
            sidecar);
    }

    std::optional<std::string> get(const fs::path& file, std::string_view name) const
    {
        auto value = primary_->get(file, name);
        if (value && *value == kRedirectStub && overflow_ && overflow_ != primary_) {
            return overflow_->get(file, name);
        }
        return value;
    }

    void set(const fs::path& file, std::string_view name, std::string_view value)
    {
        const auto limit = primary_->value_limit();
        const bool can_overflow = overflow_ && overflow_ != primary_;
        if (can_overflow && limit && value.size() > *limit) {
            redirect(file, name, value);
            return;
        }
        try {
            primary_->set(file, name, value);
        } catch (const AttributeTooLarge&) {
            if (!can_overflow) {
                throw;
            }
            redirect(file, name, value);
        }
    }

    void remove(const fs::path& file, std::string_view name)
    {
        const bool redirected = is_redirected(file, name);
        primary_->remove(file, name);
        if (redirected) {
            overflow_->remove(file, name);
        }
    }

    /// True when the primary backend holds only a redirection stub.
    bool is_redirected(const fs::path& file, std::string_view name) const
    {
        if (!overflow_ || overflow_ == primary_) {
            return false;
        }
        const auto value = primary_->get(file, name);
        return value && *value == kRedirectStub;
    }

    std::string_view kind() const { return primary_->kind(); }

private:
    void redirect(const fs::path& file, std::string_view name, std::string_view value)
    {
        overflow_->set(file, name, value);
        primary_->set(file, name, kRedirectStub);
    }

    std::shared_ptr<AttributeBackend> primary_;
    std::shared_ptr<SidecarBackend> overflow_;
};

} // namespace contentoracle

#endif // CONTENTORACLE_ATTRIBUTE_STORE_HPP
