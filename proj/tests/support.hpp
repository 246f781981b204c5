#ifndef CONTENTORACLE_TESTS_SUPPORT_HPP
#define CONTENTORACLE_TESTS_SUPPORT_HPP

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "contentoracle/attribute_store.hpp"
#include "contentoracle/pipeline.hpp"
#include "contentoracle/sniffer.hpp"
#include "httplib.h"

namespace cotest
{

namespace fs = std::filesystem;
namespace co = contentoracle;

inline fs::path data_dir() { return CONTENTORACLE_DATA_DIR; }
inline fs::path oracle_dir() { return CONTENTORACLE_ORACLE_DIR; }

class TempDir
{
public:
    TempDir()
    {
        std::string pattern = (fs::temp_directory_path() / "contentoracle-test-XXXXXX").string();
        if (!::mkdtemp(pattern.data())) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = pattern;
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline void append_file(const fs::path& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline std::string bytes(std::initializer_list<int> values)
{
    std::string out;
    for (const int v : values) {
        out += static_cast<char>(v);
    }
    return out;
}

inline const co::Databases& bundled()
{
    static const co::Databases db = co::load_databases(
        data_dir() / "mime.types", data_dir() / "signatures.db", data_dir() / "active_types.txt");
    return db;
}

/// A byte string carrying `sig`'s magic at its offset: unmasked bits come
/// from the pattern, masked-off bits are zero, the rest is filler that no
/// signature in the bundled set matches.
inline std::string synthesize(const co::Signature& sig)
{
    std::string out(sig.offset, '\x01');
    for (std::size_t i = 0; i < sig.pattern.size(); ++i) {
        std::uint8_t b = sig.pattern[i];
        if (!sig.mask.empty()) {
            b &= sig.mask[i];
        }
        out += static_cast<char>(b);
    }
    out += std::string(64, '\x01');
    return out;
}

/// The five polyglot classes: each is valid for two formats at once.
struct PolyglotCase
{
    std::string label;
    std::string filename;
    std::string content;
};

inline std::string gif_javascript()
{
    // The GIF header doubles as the start of a JS block comment; the logical
    // screen width bytes "*/" close it and the rest is script.
    return "GIF89a/*" + bytes({0x01, 0x00, 0x80, 0x00, 0x00}) + "*/=1;alert(document.domain);//" +
           bytes({0x2c, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0x02, 0x02, 0x44, 0x01, 0x00, 0x3b});
}

inline std::string jpeg_with_appended_zip()
{
    std::string jpeg = bytes({0xff, 0xd8, 0xff, 0xe0, 0x00, 0x10}) + "JFIF" + std::string(8, '\0') +
                       bytes({0xff, 0xd9});
    std::string zip = "PK" + bytes({3, 4, 20, 0, 0, 0, 0, 0}) + std::string(18, '\0') + "a.txt" + "hi" +
                      "PK" + bytes({5, 6}) + std::string(18, '\0');
    return jpeg + zip;
}

inline std::string png_with_script_comment()
{
    std::string png = bytes({0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a});
    png += bytes({0, 0, 0, 13}) + "IHDR" + bytes({0, 0, 0, 1, 0, 0, 0, 1, 8, 2, 0, 0, 0}) + "CRC!";
    const std::string text = std::string("Comment") + '\0' + "<script>alert(1)</script>";
    png += bytes({0, 0, 0, static_cast<int>(text.size())}) + "tEXt" + text + "CRC!";
    png += bytes({0, 0, 0, 0}) + "IEND" + bytes({0xae, 0x42, 0x60, 0x82});
    return png;
}

inline std::string vcard_with_html()
{
    return "BEGIN:VCARD\r\nVERSION:3.0\r\nFN:<html><script>alert(1)</script></html>\r\n"
           "END:VCARD\r\n";
}

inline std::string gif_padding_pdf()
{
    return "GIF89a" + bytes({1, 0, 1, 0, 0, 0, 0}) + std::string(1000, ' ') +
           "%PDF-1.4\n1 0 obj <<>> endobj\ntrailer <<>>\n%%EOF\n";
}

inline std::vector<PolyglotCase> polyglot_corpus()
{
    return {
        {"gif+javascript", "cat.gif", gif_javascript()},
        {"jpeg+appended zip", "photo.jpg", jpeg_with_appended_zip()},
        {"png+script in text chunk", "logo.png", png_with_script_comment()},
        {"vcard+html", "contact.vcf", vcard_with_html()},
        {"gif+padding+pdf", "scan.gif", gif_padding_pdf()},
    };
}

/// A ZIP archive whose single stored member is an HTML page with script.
/// Served as application/pdf with no extension it reproduces the
/// attachment-renaming attack.
inline std::string zip_with_script()
{
    const std::string member =
        "<html><body><script>document.write('owned')</script></body></html>\n";
    const std::string name = "index.html";
    auto le16 = [](std::size_t v) { return bytes({static_cast<int>(v & 0xff), static_cast<int>((v >> 8) & 0xff)}); };
    auto le32 = [&](std::size_t v) { return le16(v & 0xffff) + le16(v >> 16); };
    std::string local = "PK" + bytes({3, 4}) + le16(10) + le16(0) + le16(0) + le16(0) + le16(0) +
                        le32(0) + le32(member.size()) + le32(member.size()) + le16(name.size()) +
                        le16(0) + name + member;
    std::string central = "PK" + bytes({1, 2}) + le16(20) + le16(10) + le16(0) + le16(0) + le16(0) +
                          le16(0) + le32(0) + le32(member.size()) + le32(member.size()) +
                          le16(name.size()) + le16(0) + le16(0) + le16(0) + le16(0) + le32(0) +
                          le32(0) + name;
    std::string end = "PK" + bytes({5, 6}) + le16(0) + le16(0) + le16(1) + le16(1) +
                      le32(central.size()) + le32(local.size()) + le16(0);
    return local + central + end;
}

inline std::string minimal_pdf()
{
    return "%PDF-1.4\n1 0 obj <</Type /Catalog>> endobj\ntrailer <</Root 1 0 R>>\n%%EOF\n";
}

/// Loopback HTTP server on an ephemeral port, stopped on destruction.
class LoopbackServer
{
public:
    LoopbackServer()
    {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    LoopbackServer(const LoopbackServer&) = delete;
    LoopbackServer& operator=(const LoopbackServer&) = delete;
    ~LoopbackServer()
    {
        server_.stop();
        thread_.join();
    }

    httplib::Server& server() { return server_; }
    std::string url(const std::string& path) const
    {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

/// Serves `body` at `path` with the given headers (Content-Type included
/// only when non-empty).
inline void serve(httplib::Server& server, const std::string& path, std::string body,
                  std::string content_type, httplib::Headers extra = {})
{
    server.Get(path, [body = std::move(body), content_type = std::move(content_type),
                      extra = std::move(extra)](const httplib::Request&, httplib::Response& res) {
        for (const auto& [k, v] : extra) {
            res.set_header(k, v);
        }
        res.status = 200;
        res.body = body;
        if (!content_type.empty()) {
            res.set_header("Content-Type", content_type);
        }
    });
}

} // namespace cotest

#endif // CONTENTORACLE_TESTS_SUPPORT_HPP
