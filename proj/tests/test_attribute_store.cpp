#include <gtest/gtest.h>

#include "contentoracle/attribute_store.hpp"
#include "contentoracle/digest.hpp"
#include "support.hpp"

namespace co = contentoracle;
using namespace cotest;

TEST(Digest, KnownVectors)
{
    EXPECT_EQ(co::to_hex(co::sha256("")),
              "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(co::to_hex(co::sha256("abc")),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(co::to_hex(co::sha256("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")),
              "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST(Digest, FileIdentityStreamsLargeFiles)
{
    TempDir dir;
    write_file(dir / "a", std::string(1'000'000, 'a'));
    EXPECT_EQ(co::to_hex(co::content_identity(dir / "a")),
              "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
    EXPECT_THROW(co::content_identity(dir / "missing"), co::IoError);
}

TEST(Digest, HexRoundTrip)
{
    const auto d = co::sha256("x");
    EXPECT_EQ(co::digest_from_hex(co::to_hex(d)), d);
    EXPECT_FALSE(co::digest_from_hex("abc").has_value());
    EXPECT_FALSE(co::digest_from_hex(std::string(64, 'G')).has_value());
    EXPECT_FALSE(co::digest_from_hex(std::string(64, 'A')).has_value());
}

TEST(Base64, RoundTripsBinary)
{
    std::string all;
    for (int i = 0; i < 256; ++i) {
        all += static_cast<char>(i);
    }
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 255u, 256u}) {
        const std::string raw = all.substr(0, n);
        EXPECT_EQ(co::detail::base64_decode(co::detail::base64_encode(raw)), raw);
    }
    EXPECT_EQ(co::detail::base64_encode("abc"), "YWJj");
    EXPECT_FALSE(co::detail::base64_decode("@@@").has_value());
}

TEST(XattrBackend, NamesMapIntoUserNamespace)
{
    EXPECT_EQ(co::XattrBackend::native_name("user.xdg.origin.url"), "user.xdg.origin.url");
    EXPECT_EQ(co::XattrBackend::native_name("com.apple.quarantine"), "user.com.apple.quarantine");
}

TEST(SidecarBackend, LastRecordWinsAndNullDeletes)
{
    TempDir dir;
    write_file(dir / "f", "x");
    std::int64_t t = 0;
    co::SidecarBackend sidecar(dir / "journal", [&] { return ++t; });
    EXPECT_FALSE(sidecar.get(dir / "f", "user.k").has_value());
    sidecar.set(dir / "f", "user.k", "one");
    sidecar.set(dir / "f", "user.k", "two");
    EXPECT_EQ(sidecar.get(dir / "f", "user.k"), "two");
    sidecar.remove(dir / "f", "user.k");
    EXPECT_FALSE(sidecar.get(dir / "f", "user.k").has_value());
}

TEST(SidecarBackend, KeysAreScopedPerFile)
{
    TempDir dir;
    write_file(dir / "a", "x");
    write_file(dir / "b", "x");
    co::SidecarBackend sidecar(dir / "journal");
    sidecar.set(dir / "a", "user.k", "for a");
    EXPECT_FALSE(sidecar.get(dir / "b", "user.k").has_value());
    // Different spellings of the same path resolve to one identity.
    EXPECT_EQ(sidecar.get(dir.path() / "." / "a", "user.k"), "for a");
}

TEST(SidecarBackend, BinaryValuesSurvive)
{
    TempDir dir;
    write_file(dir / "f", "x");
    co::SidecarBackend sidecar(dir / "journal");
    const std::string raw = bytes({0xff, 0x00, 0xfe, 'a', 0x80});
    sidecar.set(dir / "f", "user.bin", raw);
    EXPECT_EQ(sidecar.get(dir / "f", "user.bin"), raw);
}

TEST(SidecarBackend, TornTrailingLineIsIgnored)
{
    TempDir dir;
    write_file(dir / "f", "x");
    co::SidecarBackend sidecar(dir / "journal");
    sidecar.set(dir / "f", "user.k", "good");
    append_file(dir / "journal", "{\"key\":\"user.k\",\"path\":");
    EXPECT_EQ(sidecar.get(dir / "f", "user.k"), "good");
}

TEST(AttributeStore, LargeValuesOverflowToSidecar)
{
    TempDir dir;
    write_file(dir / "f", "x");
    auto store = co::AttributeStore::xattr(dir / "overflow");
    const std::string big(co::kOverflowThreshold + 100, 'v');
    store.set(dir / "f", "user.big", big);
    EXPECT_TRUE(store.is_redirected(dir / "f", "user.big"));
    EXPECT_EQ(store.get(dir / "f", "user.big"), big);

    store.set(dir / "f", "user.big", "small");
    EXPECT_FALSE(store.is_redirected(dir / "f", "user.big"));
    EXPECT_EQ(store.get(dir / "f", "user.big"), "small");

    store.set(dir / "f", "user.big", big);
    store.remove(dir / "f", "user.big");
    EXPECT_FALSE(store.get(dir / "f", "user.big").has_value());
}

TEST(AttributeStore, XattrValuesAreVisibleToOtherTools)
{
    TempDir dir;
    write_file(dir / "f", "x");
    auto store = co::AttributeStore::xattr(dir / "overflow");
    store.set(dir / "f", "user.xdg.origin.url", "http://example.test/a");
    char buffer[128] = {};
    const auto n = ::getxattr((dir / "f").c_str(), "user.xdg.origin.url", buffer, sizeof buffer);
    ASSERT_GT(n, 0);
    EXPECT_EQ(std::string(buffer, static_cast<std::size_t>(n)), "http://example.test/a");
}

TEST(FileLock, ExclusiveLocksSerialize)
{
    TempDir dir;
    write_file(dir / "f", "x");
    std::atomic<int> inside{0};
    std::atomic<int> max_inside{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&] {
            for (int j = 0; j < 20; ++j) {
                co::FileLock lock(dir / "f", co::FileLock::Mode::Exclusive);
                const int now = ++inside;
                int seen = max_inside.load();
                while (now > seen && !max_inside.compare_exchange_weak(seen, now)) {
                }
                --inside;
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    EXPECT_EQ(max_inside.load(), 1);
}
