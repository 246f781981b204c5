#ifndef CONTENTORACLE_DIGEST_HPP
#define CONTENTORACLE_DIGEST_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "contentoracle/error.hpp"

namespace contentoracle
{

/// SHA-256 of a file's contents.
using Digest = std::array<std::uint8_t, 32>;

inline std::string to_hex(const Digest& d)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (auto b : d) {
        out += digits[b >> 4];
        out += digits[b & 0x0f];
    }
    return out;
}

inline std::optional<Digest> digest_from_hex(std::string_view hex)
{
    if (hex.size() != 64) {
        return std::nullopt;
    }
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        return -1;
    };
    Digest d{};
    for (std::size_t i = 0; i < 32; ++i) {
        const int hi = nibble(hex[2 * i]);
        const int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            return std::nullopt;
        }
        d[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return d;
}

/// Incremental SHA-256 over OpenSSL's EVP interface.
class Sha256
{
public:
    Sha256()
        : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free)
    {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw Error("SHA-256 initialisation failed");
        }
    }

    void update(const void* data, std::size_t size)
    {
        if (EVP_DigestUpdate(ctx_.get(), data, size) != 1) {
            throw Error("SHA-256 update failed");
        }
    }

    void update(std::string_view s) { update(s.data(), s.size()); }

    Digest finish()
    {
        Digest d{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), d.data(), &len) != 1 || len != d.size()) {
            throw Error("SHA-256 finalisation failed");
        }
        return d;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline Digest sha256(std::string_view data)
{
    Sha256 h;
    h.update(data);
    return h.finish();
}

/// Streams the file through SHA-256 in fixed-size chunks.
inline Digest content_identity(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file for hashing", path.string());
    }
    Sha256 h;
    std::array<char, 64 * 1024> buffer;
    while (in) {
        in.read(buffer.data(), buffer.size());
        h.update(buffer.data(), static_cast<std::size_t>(in.gcount()));
    }
    if (in.bad()) {
        throw IoError("read failed while hashing", path.string());
    }
    return h.finish();
}

} // namespace contentoracle

#endif // CONTENTORACLE_DIGEST_HPP
